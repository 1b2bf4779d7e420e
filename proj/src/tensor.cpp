#include "ssmopt/tensor.hpp"

#include <algorithm>
#include <tuple>

#include "ssmopt/error.hpp"

namespace ssmopt {

namespace {

void check_index(int n, int idx) {
  if (idx < 0 || idx >= n) fail(ErrorCode::InvalidModel, "tensor index out of range");
}

template <typename E, typename Key>
void compress_entries(std::vector<E>& entries, Key key) {
  std::sort(entries.begin(), entries.end(), [&](const E& a, const E& b) { return key(a) < key(b); });
  std::vector<E> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    if (!out.empty() && key(out.back()) == key(e))
      out.back().v += e.v;
    else
      out.push_back(e);
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const E& e) { return e.v == 0.0; }), out.end());
  entries.swap(out);
}

}  // namespace

void SymTensor3::add_component(int i, int j, int k, double v) {
  check_index(n_, i);
  check_index(n_, j);
  check_index(n_, k);
  if (j > k) std::swap(j, k);
  entries_.push_back({i, j, k, v});
}

void SymTensor3::add_raw(int i, int j, int k, double v) {
  add_component(i, j, k, j == k ? v : 0.5 * v);
}

void SymTensor3::compress() {
  compress_entries(entries_, [](const Entry& e) { return std::make_tuple(e.i, e.j, e.k); });
}

double SymTensor3::component(int i, int j, int k) const {
  if (j > k) std::swap(j, k);
  double s = 0.0;
  for (const auto& e : entries_)
    if (e.i == i && e.j == j && e.k == k) s += e.v;
  return s;
}

SymTensor3 SymTensor3::axpy(const SymTensor3& a, double s, const SymTensor3& b) {
  SymTensor3 out(std::max(a.n_, b.n_));
  out.entries_ = a.entries_;
  for (auto e : b.entries_) {
    e.v *= s;
    out.entries_.push_back(e);
  }
  out.compress();
  return out;
}

SymTensor3 SymTensor3::scaled(double s) const {
  SymTensor3 out = *this;
  for (auto& e : out.entries_) e.v *= s;
  return out;
}

int SymTensor4::permutations(int j, int k, int l, std::array<std::array<int, 3>, 6>& out) {
  if (j == k && k == l) {
    out[0] = {j, j, j};
    return 1;
  }
  if (j == k) {
    out[0] = {j, j, l};
    out[1] = {j, l, j};
    out[2] = {l, j, j};
    return 3;
  }
  if (k == l) {
    out[0] = {j, k, k};
    out[1] = {k, j, k};
    out[2] = {k, k, j};
    return 3;
  }
  out[0] = {j, k, l};
  out[1] = {j, l, k};
  out[2] = {k, j, l};
  out[3] = {k, l, j};
  out[4] = {l, j, k};
  out[5] = {l, k, j};
  return 6;
}

void SymTensor4::add_component(int i, int j, int k, int l, double v) {
  check_index(n_, i);
  check_index(n_, j);
  check_index(n_, k);
  check_index(n_, l);
  std::array<int, 3> t{j, k, l};
  std::sort(t.begin(), t.end());
  entries_.push_back({i, t[0], t[1], t[2], v});
}

void SymTensor4::add_raw(int i, int j, int k, int l, double v) {
  std::array<int, 3> t{j, k, l};
  std::sort(t.begin(), t.end());
  std::array<std::array<int, 3>, 6> p;
  const int np = permutations(t[0], t[1], t[2], p);
  add_component(i, t[0], t[1], t[2], v / np);
}

void SymTensor4::compress() {
  compress_entries(entries_, [](const Entry& e) { return std::make_tuple(e.i, e.j, e.k, e.l); });
}

double SymTensor4::component(int i, int j, int k, int l) const {
  std::array<int, 3> t{j, k, l};
  std::sort(t.begin(), t.end());
  double s = 0.0;
  for (const auto& e : entries_)
    if (e.i == i && e.j == t[0] && e.k == t[1] && e.l == t[2]) s += e.v;
  return s;
}

SymTensor4 SymTensor4::axpy(const SymTensor4& a, double s, const SymTensor4& b) {
  SymTensor4 out(std::max(a.n_, b.n_));
  out.entries_ = a.entries_;
  for (auto e : b.entries_) {
    e.v *= s;
    out.entries_.push_back(e);
  }
  out.compress();
  return out;
}

SymTensor4 SymTensor4::scaled(double s) const {
  SymTensor4 out = *this;
  for (auto& e : out.entries_) e.v *= s;
  return out;
}

}  // namespace ssmopt
