#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

namespace vdmforge {

// Compact 3D kd-tree over a flat xyz array. Build and queries are fully
// deterministic: splits use the widest axis with (coordinate, index)
// tie-breaking, and nearest() returns the neighbor minimizing
// (squared distance, index) lexicographically — the same winner a
// first-minimum linear scan produces.
template <typename Real>
class KdTree3 {
 public:
  KdTree3() = default;

  // `pts` is n*3 interleaved xyz; the caller keeps it alive for queries.
  void build(const Real* pts, int n) {
    pts_ = pts;
    n_ = n;
    order_.resize(n);
    for (int i = 0; i < n; ++i) order_[i] = i;
    nodes_.clear();
    nodes_.reserve(n > 0 ? 2 * n / kLeafSize + 2 : 0);
    if (n > 0) build_node(0, n);
  }

  int size() const { return n_; }

  struct Hit {
    int index = -1;
    Real sq_dist = std::numeric_limits<Real>::max();
  };

  Hit nearest(Real x, Real y, Real z) const {
    Hit best;
    if (n_ == 0) return best;
    const Real q[3] = {x, y, z};
    search(0, q, best);
    return best;
  }

 private:
  static constexpr int kLeafSize = 8;

  struct Node {
    Real split = 0;
    int axis = -1;              // -1 marks a leaf
    int left = -1, right = -1;  // children for inner nodes
    int begin = 0, end = 0;     // order_ range for leaves
  };

  int build_node(int lo, int hi) {
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    if (hi - lo <= kLeafSize) {
      nodes_[id].begin = lo;
      nodes_[id].end = hi;
      return id;
    }
    Real mins[3], maxs[3];
    for (int a = 0; a < 3; ++a) {
      mins[a] = std::numeric_limits<Real>::max();
      maxs[a] = std::numeric_limits<Real>::lowest();
    }
    for (int i = lo; i < hi; ++i) {
      const Real* p = pts_ + 3 * order_[i];
      for (int a = 0; a < 3; ++a) {
        mins[a] = std::min(mins[a], p[a]);
        maxs[a] = std::max(maxs[a], p[a]);
      }
    }
    int axis = 0;
    for (int a = 1; a < 3; ++a)
      if (maxs[a] - mins[a] > maxs[axis] - mins[axis]) axis = a;

    int mid = (lo + hi) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](int a, int b) {
                       Real ca = pts_[3 * a + axis], cb = pts_[3 * b + axis];
                       return ca != cb ? ca < cb : a < b;
                     });
    Real split = pts_[3 * order_[mid] + axis];
    int left = build_node(lo, mid);
    int right = build_node(mid, hi);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void consider(int idx, const Real* q, Hit& best) const {
    const Real* p = pts_ + 3 * idx;
    Real dx = q[0] - p[0], dy = q[1] - p[1], dz = q[2] - p[2];
    Real d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < best.sq_dist || (d2 == best.sq_dist && idx < best.index)) {
      best.sq_dist = d2;
      best.index = idx;
    }
  }

  void search(int node, const Real* q, Hit& best) const {
    const Node& nd = nodes_[node];
    if (nd.axis < 0) {
      for (int i = nd.begin; i < nd.end; ++i) consider(order_[i], q, best);
      return;
    }
    Real delta = q[nd.axis] - nd.split;
    int near = delta < 0 ? nd.left : nd.right;
    int far = delta < 0 ? nd.right : nd.left;
    search(near, q, best);
    if (delta * delta <= best.sq_dist) search(far, q, best);
  }

  const Real* pts_ = nullptr;
  int n_ = 0;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace vdmforge
