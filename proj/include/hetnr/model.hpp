#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hetnr/errors.hpp"
#include "hetnr/graph.hpp"
#include "hetnr/hops.hpp"
#include "hetnr/rng.hpp"
#include "hetnr/types.hpp"

namespace hetnr {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Learnable weights: one linear projection per node type (heterogeneous
/// feature widths -> shared hidden space, applied before any aggregation)
/// plus one linear classifier on the averaged hop embeddings.
template <class Scalar>
struct ModelParams {
  std::vector<std::string> type_order;            // schema order
  std::map<std::string, Matrix<Scalar>> proj_w;   // type -> (d_t x hidden)
  std::map<std::string, Vector<Scalar>> proj_b;   // type -> hidden
  Matrix<Scalar> cls_w;                           // hidden x classes
  Vector<Scalar> cls_b;                           // classes
  Index hidden = 0;

  void set_zero() {
    for (auto& [t, w] : proj_w) w.setZero();
    for (auto& [t, b] : proj_b) b.setZero();
    cls_w.setZero();
    cls_b.setZero();
  }

  /// this += a * other  (same shapes assumed)
  void axpy(Scalar a, const ModelParams& other) {
    for (auto& [t, w] : proj_w) w += a * other.proj_w.at(t);
    for (auto& [t, b] : proj_b) b += a * other.proj_b.at(t);
    cls_w += a * other.cls_w;
    cls_b += a * other.cls_b;
  }

  Scalar squared_norm() const {
    Scalar s = 0;
    for (const auto& [t, w] : proj_w) s += w.squaredNorm();
    for (const auto& [t, b] : proj_b) s += b.squaredNorm();
    return s + cls_w.squaredNorm() + cls_b.squaredNorm();
  }

  bool all_finite() const {
    for (const auto& [t, w] : proj_w) if (!w.allFinite()) return false;
    for (const auto& [t, b] : proj_b) if (!b.allFinite()) return false;
    return cls_w.allFinite() && cls_b.allFinite();
  }

  Index size() const {
    Index n = cls_w.size() + cls_b.size();
    for (const auto& [t, w] : proj_w) n += w.size();
    for (const auto& [t, b] : proj_b) n += b.size();
    return n;
  }

  // Flat layout (type order: proj_w row-major then proj_b; then classifier):
  // the coordinate order used by finite differences and checkpoints.
  Vector<Scalar> flatten() const {
    Vector<Scalar> v(size());
    Index at = 0;
    for (const auto& t : type_order) {
      const auto& w = proj_w.at(t);
      for (Index r = 0; r < w.rows(); ++r)
        for (Index c = 0; c < w.cols(); ++c) v[at++] = w(r, c);
      const auto& b = proj_b.at(t);
      for (Index i = 0; i < b.size(); ++i) v[at++] = b[i];
    }
    for (Index r = 0; r < cls_w.rows(); ++r)
      for (Index c = 0; c < cls_w.cols(); ++c) v[at++] = cls_w(r, c);
    for (Index i = 0; i < cls_b.size(); ++i) v[at++] = cls_b[i];
    return v;
  }

  void unflatten(const Vector<Scalar>& v) {
    Index at = 0;
    for (const auto& t : type_order) {
      auto& w = proj_w.at(t);
      for (Index r = 0; r < w.rows(); ++r)
        for (Index c = 0; c < w.cols(); ++c) w(r, c) = v[at++];
      auto& b = proj_b.at(t);
      for (Index i = 0; i < b.size(); ++i) b[i] = v[at++];
    }
    for (Index r = 0; r < cls_w.rows(); ++r)
      for (Index c = 0; c < cls_w.cols(); ++c) cls_w(r, c) = v[at++];
    for (Index i = 0; i < cls_b.size(); ++i) cls_b[i] = v[at++];
  }
};

/// Architecture logits, one vector per hop (length = candidate count).
template <class Scalar>
struct ArchParams {
  std::vector<Vector<Scalar>> per_hop;

  static ArchParams zeros(const SearchSpace& space) {
    ArchParams a;
    for (const auto& hop : space.per_hop) {
      a.per_hop.push_back(Vector<Scalar>::Zero(static_cast<Index>(hop.size())));
    }
    return a;
  }

  void axpy(Scalar s, const ArchParams& other) {
    for (std::size_t k = 0; k < per_hop.size(); ++k) per_hop[k] += s * other.per_hop[k];
  }

  bool all_finite() const {
    for (const auto& v : per_hop) if (!v.allFinite()) return false;
    return true;
  }

  Index size() const {
    Index n = 0;
    for (const auto& v : per_hop) n += v.size();
    return n;
  }

  Vector<Scalar> flatten() const {
    Vector<Scalar> v(size());
    Index at = 0;
    for (const auto& h : per_hop)
      for (Index i = 0; i < h.size(); ++i) v[at++] = h[i];
    return v;
  }

  void unflatten(const Vector<Scalar>& v) {
    Index at = 0;
    for (auto& h : per_hop)
      for (Index i = 0; i < h.size(); ++i) h[i] = v[at++];
  }
};

/// A discrete per-hop selection.
struct Architecture {
  std::vector<HopCandidate> per_hop;

  bool operator==(const Architecture& o) const { return per_hop == o.per_hop; }
  bool operator<(const Architecture& o) const;
};

std::string to_string(const Architecture& a);

struct ForwardConfig {
  int num_hops = 3;
  double dropout = 0.2;
  bool training = false;
  double norm_epsilon = 1e-12;
};

// ---------------------------------------------------------------------------
// Features and problem instance
// ---------------------------------------------------------------------------

template <class Scalar>
struct FeatureSet {
  std::vector<std::string> type_order;
  std::map<std::string, Matrix<Scalar>> by_type;
  std::map<std::string, Index> offsets;  // global stacking offsets
  Index total_nodes = 0;
  std::string anchor_type;
  Index anchor_offset = 0;
  Index num_anchors = 0;
};

template <class Scalar>
FeatureSet<Scalar> make_features(const HinGraph& graph, const std::string& anchor) {
  FeatureSet<Scalar> f;
  f.type_order = graph.schema.node_types();
  Index off = 0;
  for (const auto& t : f.type_order) {
    f.by_type[t] = graph.features.at(t).template cast<Scalar>();
    f.offsets[t] = off;
    off += graph.node_count(t);
  }
  f.total_nodes = off;
  f.anchor_type = anchor;
  f.anchor_offset = f.offsets.at(anchor);
  f.num_anchors = graph.node_count(anchor);
  return f;
}

/// Everything fixed during training on one (graph, task, space) triple.
template <class Scalar>
struct Instance {
  FeatureSet<Scalar> features;
  HopOperatorSet<Scalar> ops;
  std::vector<int> labels;
  int num_classes = 0;
};

template <class Scalar>
Instance<Scalar> make_instance(const HinGraph& graph, const TargetTask& task,
                               const SearchSpace& space,
                               const NeighborhoodOptions& opts = {}) {
  return Instance<Scalar>{make_features<Scalar>(graph, task.anchor_type),
                          build_operators<Scalar>(graph, space, opts),
                          task.labels, task.num_classes};
}

// ---------------------------------------------------------------------------
// Initialization and small numerics
// ---------------------------------------------------------------------------

template <class Scalar>
ModelParams<Scalar> init_params(const HinGraph& graph, const TargetTask& task,
                                Index hidden, std::uint64_t seed) {
  if (hidden < 1) throw Error("hidden must be >= 1");
  ModelParams<Scalar> p;
  p.hidden = hidden;
  p.type_order = graph.schema.node_types();
  auto rng = make_rng(seed, "init");
  auto fill = [&rng](Matrix<Scalar>& m, Index fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<Scalar>(dist(rng));
  };
  for (const auto& t : p.type_order) {
    const Index d = graph.feature_dim(t);
    p.proj_w[t] = Matrix<Scalar>(d, hidden);
    fill(p.proj_w[t], d);
    p.proj_b[t] = Vector<Scalar>::Zero(hidden);
  }
  p.cls_w = Matrix<Scalar>(hidden, task.num_classes);
  fill(p.cls_w, hidden);
  p.cls_b = Vector<Scalar>::Zero(task.num_classes);
  return p;
}

/// Softmax with max-subtraction; output sums to 1 with all entries > 0.
template <class Scalar>
Vector<Scalar> mixture_weights(const Vector<Scalar>& logits) {
  if (logits.size() == 0) throw NonFiniteInput("empty mixture logits");
  if (!logits.allFinite()) throw NonFiniteInput("non-finite mixture logits");
  Vector<Scalar> e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

template <class Scalar>
Scalar gelu_scalar(Scalar x) {
  return Scalar(0.5) * x * (Scalar(1) + std::erf(x / Scalar(std::sqrt(2.0))));
}

template <class Scalar>
Scalar gelu_grad_scalar(Scalar x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  const Scalar cdf = Scalar(0.5) * (Scalar(1) + std::erf(x / Scalar(std::sqrt(2.0))));
  const Scalar pdf = Scalar(inv_sqrt_2pi * std::exp(-0.5 * double(x) * double(x)));
  return cdf + x * pdf;
}

/// e^k = sum_c alpha_c * (op_c * projected); the zero candidate contributes
/// the zero matrix.
template <class Scalar>
Matrix<Scalar> hop_embedding_mixed(const Matrix<Scalar>& projected,
                                   const std::vector<HopOperator<Scalar>>& hop_ops,
                                   const Vector<Scalar>& alpha) {
  if (static_cast<Index>(hop_ops.size()) != alpha.size()) {
    throw ShapeMismatch("operator list and mixture weight length differ");
  }
  Index rows = 0;
  for (const auto& op : hop_ops) rows = std::max(rows, op.matrix.rows());
  Matrix<Scalar> e = Matrix<Scalar>::Zero(rows, projected.cols());
  for (std::size_t c = 0; c < hop_ops.size(); ++c) {
    if (hop_ops[c].candidate.is_zero()) continue;
    e += alpha[static_cast<Index>(c)] * (hop_ops[c].matrix * projected);
  }
  return e;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

namespace detail {

/// How hop embeddings are formed: for each hop, the active candidates and
/// their weights, plus (when selection came from arch logits) the full
/// mixture so gradients can flow back to the logits.
template <class Scalar>
struct MixPlan {
  struct Hop {
    std::vector<int> active;          // candidate indices with nonzero weight
    Vector<Scalar> weights;           // aligned with `active`
    std::optional<Vector<Scalar>> alpha;  // full softmax, when differentiable
  };
  std::vector<Hop> hops;
};

template <class Scalar>
MixPlan<Scalar> mixed_plan(const SearchSpace& space, const ArchParams<Scalar>& arch) {
  MixPlan<Scalar> plan;
  for (std::size_t k = 0; k < space.per_hop.size(); ++k) {
    typename MixPlan<Scalar>::Hop hop;
    hop.alpha = mixture_weights(arch.per_hop[k]);
    hop.weights.resize(hop.alpha->size());
    for (Index c = 0; c < hop.alpha->size(); ++c) {
      hop.active.push_back(static_cast<int>(c));
      hop.weights[c] = (*hop.alpha)[c];
    }
    plan.hops.push_back(std::move(hop));
  }
  return plan;
}

template <class Scalar>
MixPlan<Scalar> discrete_plan(const SearchSpace& space, const Architecture& arch) {
  if (static_cast<int>(arch.per_hop.size()) != space.num_hops) {
    throw ShapeMismatch("architecture hop count differs from search space");
  }
  MixPlan<Scalar> plan;
  for (std::size_t k = 0; k < arch.per_hop.size(); ++k) {
    typename MixPlan<Scalar>::Hop hop;
    hop.active.push_back(space.candidate_index(arch.per_hop[k]));
    hop.weights = Vector<Scalar>::Ones(1);
    plan.hops.push_back(std::move(hop));
  }
  return plan;
}

/// Single sampled candidate per hop, weighted by its softmax probability
/// (gradients still reach every logit of the hop through that probability).
template <class Scalar>
MixPlan<Scalar> sampled_plan(const SearchSpace& space, const ArchParams<Scalar>& arch,
                             const std::vector<int>& picks) {
  MixPlan<Scalar> plan;
  for (std::size_t k = 0; k < space.per_hop.size(); ++k) {
    typename MixPlan<Scalar>::Hop hop;
    hop.alpha = mixture_weights(arch.per_hop[k]);
    hop.active.push_back(picks[k]);
    hop.weights = Vector<Scalar>::Ones(1) * (*hop.alpha)[picks[k]];
    plan.hops.push_back(std::move(hop));
  }
  return plan;
}

template <class Scalar>
struct ForwardCache {
  Matrix<Scalar> projected;                 // post-dropout, total x hidden
  Matrix<Scalar> drop_mask;                 // empty when not training
  std::vector<std::vector<Matrix<Scalar>>> per_candidate;  // [hop][active] op * projected
  std::vector<Matrix<Scalar>> pre_norm;     // k = 0..K (0 = anchor term)
  std::vector<Matrix<Scalar>> normalized;
  std::vector<Vector<Scalar>> row_norms;
  Matrix<Scalar> combined;                  // mean of activated hop embeddings
  Matrix<Scalar> logits;
  MixPlan<Scalar> plan;
};

template <class Scalar>
void require_finite(const Matrix<Scalar>& m, const char* stage) {
  if (!m.allFinite()) {
    throw NonFiniteActivation(std::string("non-finite values after stage: ") + stage);
  }
}

template <class Scalar>
Matrix<Scalar> rownorm(const Matrix<Scalar>& e, Scalar eps, Vector<Scalar>* norms) {
  Matrix<Scalar> out(e.rows(), e.cols());
  norms->resize(e.rows());
  for (Index r = 0; r < e.rows(); ++r) {
    const Scalar n = e.row(r).norm();
    (*norms)[r] = n;
    out.row(r) = e.row(r) / std::max(n, eps);
  }
  return out;
}

template <class Scalar>
ForwardCache<Scalar> forward_pass(const Instance<Scalar>& inst,
                                  const ModelParams<Scalar>& params,
                                  MixPlan<Scalar> plan, const ForwardConfig& cfg,
                                  std::uint64_t dropout_seed) {
  const auto& f = inst.features;
  if (cfg.num_hops != inst.ops.space.num_hops) {
    throw ShapeMismatch("config K differs from operator set");
  }
  ForwardCache<Scalar> cache;
  cache.plan = std::move(plan);

  cache.projected.resize(f.total_nodes, params.hidden);
  for (const auto& t : f.type_order) {
    const auto& x = f.by_type.at(t);
    const auto& w = params.proj_w.at(t);
    if (x.cols() != w.rows()) {
      throw ShapeMismatch("feature dim of type " + t + " does not match projection");
    }
    cache.projected.middleRows(f.offsets.at(t), x.rows()) =
        (x * w).rowwise() + params.proj_b.at(t).transpose();
  }
  require_finite(cache.projected, "projection");

  if (cfg.training && cfg.dropout > 0.0) {
    auto rng = make_rng(dropout_seed, "dropout");
    std::bernoulli_distribution keep(1.0 - cfg.dropout);
    const Scalar scale = Scalar(1.0 / (1.0 - cfg.dropout));
    cache.drop_mask.resize(f.total_nodes, params.hidden);
    for (Index r = 0; r < cache.drop_mask.rows(); ++r)
      for (Index c = 0; c < cache.drop_mask.cols(); ++c)
        cache.drop_mask(r, c) = keep(rng) ? scale : Scalar(0);
    cache.projected.array() *= cache.drop_mask.array();
  }

  const Scalar eps = static_cast<Scalar>(cfg.norm_epsilon);
  const int K = cfg.num_hops;
  cache.pre_norm.resize(static_cast<std::size_t>(K) + 1);
  cache.normalized.resize(static_cast<std::size_t>(K) + 1);
  cache.row_norms.resize(static_cast<std::size_t>(K) + 1);
  cache.per_candidate.resize(static_cast<std::size_t>(K));

  cache.pre_norm[0] = cache.projected.middleRows(f.anchor_offset, f.num_anchors);
  for (int k = 1; k <= K; ++k) {
    const auto& hop_plan = cache.plan.hops[static_cast<std::size_t>(k - 1)];
    const auto& hop_ops = inst.ops.ops[static_cast<std::size_t>(k - 1)];
    Matrix<Scalar> e = Matrix<Scalar>::Zero(f.num_anchors, params.hidden);
    auto& products = cache.per_candidate[static_cast<std::size_t>(k - 1)];
    for (std::size_t i = 0; i < hop_plan.active.size(); ++i) {
      const auto& op = hop_ops[static_cast<std::size_t>(hop_plan.active[i])];
      if (op.candidate.is_zero()) {
        products.emplace_back();  // zero product, kept for index alignment
        continue;
      }
      products.push_back(op.matrix * cache.projected);
      e += hop_plan.weights[static_cast<Index>(i)] * products.back();
    }
    require_finite(e, "hop aggregation");
    cache.pre_norm[static_cast<std::size_t>(k)] = std::move(e);
  }

  cache.combined = Matrix<Scalar>::Zero(f.num_anchors, params.hidden);
  for (int k = 0; k <= K; ++k) {
    auto& slot = cache.normalized[static_cast<std::size_t>(k)];
    slot = rownorm(cache.pre_norm[static_cast<std::size_t>(k)], eps,
                   &cache.row_norms[static_cast<std::size_t>(k)]);
    cache.combined += slot.unaryExpr([](Scalar x) { return gelu_scalar(x); });
  }
  cache.combined /= Scalar(K + 1);
  require_finite(cache.combined, "inter-hop average");

  cache.logits = (cache.combined * params.cls_w).rowwise() + params.cls_b.transpose();
  require_finite(cache.logits, "classifier");
  return cache;
}

}  // namespace detail

/// Mean softmax cross-entropy over the masked anchor rows.
template <class Scalar>
Scalar loss(const Matrix<Scalar>& logits, const std::vector<int>& labels,
            const std::vector<Index>& mask) {
  if (mask.empty()) throw EmptyMask("loss mask is empty");
  Scalar total = 0;
  for (Index row : mask) {
    const auto l = logits.row(row);
    const Scalar m = l.maxCoeff();
    const Scalar lse = m + std::log((l.array() - m).exp().sum());
    total += lse - l[labels[static_cast<std::size_t>(row)]];
  }
  return total / static_cast<Scalar>(mask.size());
}

template <class Scalar>
Matrix<Scalar> forward(const Instance<Scalar>& inst, const ModelParams<Scalar>& params,
                       const ArchParams<Scalar>& arch, const ForwardConfig& cfg,
                       std::uint64_t dropout_seed = 0) {
  return detail::forward_pass(inst, params, detail::mixed_plan(inst.ops.space, arch),
                              cfg, dropout_seed)
      .logits;
}

template <class Scalar>
Matrix<Scalar> forward(const Instance<Scalar>& inst, const ModelParams<Scalar>& params,
                       const Architecture& arch, const ForwardConfig& cfg,
                       std::uint64_t dropout_seed = 0) {
  return detail::forward_pass(inst, params, detail::discrete_plan<Scalar>(inst.ops.space, arch),
                              cfg, dropout_seed)
      .logits;
}

enum class GradWrt { Theta, Lambda, Both };

template <class Scalar>
struct Gradients {
  ModelParams<Scalar> theta;
  ArchParams<Scalar> lambda;
  Scalar loss_value = 0;
};

namespace detail {

// Reverse-mode pass mirroring forward_pass. The L2-normalization Jacobian is
// (g - n (n . g)) / r on rows with r > eps and g / eps on clamped rows.
template <class Scalar>
Gradients<Scalar> backward_pass(const Instance<Scalar>& inst,
                                const ModelParams<Scalar>& params,
                                const ForwardCache<Scalar>& cache,
                                const std::vector<Index>& mask, GradWrt wrt,
                                const ForwardConfig& cfg) {
  const auto& f = inst.features;
  const int K = cfg.num_hops;
  const Scalar eps = static_cast<Scalar>(cfg.norm_epsilon);

  Gradients<Scalar> g;
  g.loss_value = loss(cache.logits, inst.labels, mask);
  g.theta = params;
  g.theta.set_zero();
  if (!cache.plan.hops.empty() && cache.plan.hops[0].alpha) {
    for (const auto& hop : cache.plan.hops) {
      g.lambda.per_hop.push_back(Vector<Scalar>::Zero(hop.alpha->size()));
    }
  }

  // d loss / d logits
  Matrix<Scalar> dlogits = Matrix<Scalar>::Zero(cache.logits.rows(), cache.logits.cols());
  const Scalar inv_m = Scalar(1) / static_cast<Scalar>(mask.size());
  for (Index row : mask) {
    const auto l = cache.logits.row(row);
    const Scalar m = l.maxCoeff();
    Vector<Scalar> p = (l.transpose().array() - m).exp().matrix();
    p /= p.sum();
    dlogits.row(row) = p.transpose() * inv_m;
    dlogits(row, inst.labels[static_cast<std::size_t>(row)]) -= inv_m;
  }

  g.theta.cls_w = cache.combined.transpose() * dlogits;
  g.theta.cls_b = dlogits.colwise().sum().transpose();
  Matrix<Scalar> dcombined = dlogits * params.cls_w.transpose();
  dcombined /= Scalar(K + 1);

  Matrix<Scalar> dprojected = Matrix<Scalar>::Zero(f.total_nodes, params.hidden);
  for (int k = 0; k <= K; ++k) {
    const auto& normalized = cache.normalized[static_cast<std::size_t>(k)];
    const auto& pre = cache.pre_norm[static_cast<std::size_t>(k)];
    const auto& norms = cache.row_norms[static_cast<std::size_t>(k)];

    Matrix<Scalar> dnorm =
        (dcombined.array() *
         normalized.unaryExpr([](Scalar x) { return gelu_grad_scalar(x); }).array())
            .matrix();

    Matrix<Scalar> dpre(pre.rows(), pre.cols());
    for (Index r = 0; r < pre.rows(); ++r) {
      const Scalar n = norms[r];
      if (n > eps) {
        const Scalar inner = normalized.row(r).dot(dnorm.row(r));
        dpre.row(r) = (dnorm.row(r) - normalized.row(r) * inner) / n;
      } else {
        dpre.row(r) = dnorm.row(r) / eps;
      }
    }

    if (k == 0) {
      dprojected.middleRows(f.anchor_offset, f.num_anchors) += dpre;
      continue;
    }

    const auto& hop_plan = cache.plan.hops[static_cast<std::size_t>(k - 1)];
    const auto& hop_ops = inst.ops.ops[static_cast<std::size_t>(k - 1)];
    const auto& products = cache.per_candidate[static_cast<std::size_t>(k - 1)];
    Vector<Scalar> dweights = Vector<Scalar>::Zero(static_cast<Index>(hop_plan.active.size()));
    for (std::size_t i = 0; i < hop_plan.active.size(); ++i) {
      const auto& op = hop_ops[static_cast<std::size_t>(hop_plan.active[i])];
      if (op.candidate.is_zero()) continue;
      dweights[static_cast<Index>(i)] = (products[i].array() * dpre.array()).sum();
      dprojected += op.matrix.transpose() *
                    (hop_plan.weights[static_cast<Index>(i)] * dpre);
    }

    if (hop_plan.alpha && !g.lambda.per_hop.empty() &&
        (wrt == GradWrt::Lambda || wrt == GradWrt::Both)) {
      // Scatter the active-weight gradients into the full mixture, then the
      // softmax Jacobian: dl = alpha .* (dalpha - <alpha, dalpha>).
      const Vector<Scalar>& alpha = *hop_plan.alpha;
      Vector<Scalar> dalpha = Vector<Scalar>::Zero(alpha.size());
      for (std::size_t i = 0; i < hop_plan.active.size(); ++i) {
        dalpha[hop_plan.active[i]] += dweights[static_cast<Index>(i)];
      }
      const Scalar inner = alpha.dot(dalpha);
      g.lambda.per_hop[static_cast<std::size_t>(k - 1)] =
          (alpha.array() * (dalpha.array() - inner)).matrix();
    }
  }

  if (wrt == GradWrt::Theta || wrt == GradWrt::Both) {
    if (cache.drop_mask.size() > 0) {
      dprojected.array() *= cache.drop_mask.array();
    }
    for (const auto& t : f.type_order) {
      const auto& x = f.by_type.at(t);
      const Index off = f.offsets.at(t);
      g.theta.proj_w[t] = x.transpose() * dprojected.middleRows(off, x.rows());
      g.theta.proj_b[t] = dprojected.middleRows(off, x.rows()).colwise().sum().transpose();
    }
  } else {
    g.theta.set_zero();
  }
  return g;
}

}  // namespace detail

template <class Scalar>
Gradients<Scalar> grads(const Instance<Scalar>& inst, const ModelParams<Scalar>& params,
                        const ArchParams<Scalar>& arch, const ForwardConfig& cfg,
                        const std::vector<Index>& mask, GradWrt wrt,
                        std::uint64_t dropout_seed = 0) {
  auto cache = detail::forward_pass(inst, params, detail::mixed_plan(inst.ops.space, arch),
                                    cfg, dropout_seed);
  return detail::backward_pass(inst, params, cache, mask, wrt, cfg);
}

template <class Scalar>
Gradients<Scalar> grads(const Instance<Scalar>& inst, const ModelParams<Scalar>& params,
                        const Architecture& arch, const ForwardConfig& cfg,
                        const std::vector<Index>& mask,
                        std::uint64_t dropout_seed = 0) {
  auto cache = detail::forward_pass(inst, params,
                                    detail::discrete_plan<Scalar>(inst.ops.space, arch),
                                    cfg, dropout_seed);
  return detail::backward_pass(inst, params, cache, mask, GradWrt::Theta, cfg);
}

/// Sampled-mode gradients: one candidate per hop (chosen by the caller),
/// weighted by its mixture probability.
template <class Scalar>
Gradients<Scalar> grads_sampled(const Instance<Scalar>& inst,
                                const ModelParams<Scalar>& params,
                                const ArchParams<Scalar>& arch,
                                const std::vector<int>& picks,
                                const ForwardConfig& cfg,
                                const std::vector<Index>& mask, GradWrt wrt,
                                std::uint64_t dropout_seed = 0) {
  auto cache = detail::forward_pass(
      inst, params, detail::sampled_plan(inst.ops.space, arch, picks), cfg, dropout_seed);
  return detail::backward_pass(inst, params, cache, mask, wrt, cfg);
}

// ---------------------------------------------------------------------------
// Finite-difference checker
// ---------------------------------------------------------------------------

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::vector<std::string> failures;
  bool pass = true;
};

/// Central-difference check of every theta and lambda coordinate against the
/// analytic gradients. Relative error uses max(|analytic|, |numeric|) with a
/// 1e-8 floor in the denominator.
template <class Scalar>
GradCheckReport grad_check(const Instance<Scalar>& inst, ModelParams<Scalar> params,
                           ArchParams<Scalar> arch, const ForwardConfig& cfg,
                           const std::vector<Index>& mask, double h, double tol,
                           std::uint64_t dropout_seed = 0) {
  GradCheckReport report;
  const auto analytic = grads(inst, params, arch, cfg, mask, GradWrt::Both, dropout_seed);

  auto eval = [&](const ModelParams<Scalar>& p, const ArchParams<Scalar>& a) {
    return static_cast<double>(
        loss(forward(inst, p, a, cfg, dropout_seed), inst.labels, mask));
  };
  auto record = [&](const std::string& name, Index i, double got, double want) {
    const double rel = std::abs(got - want) /
                       std::max({std::abs(got), std::abs(want), 1e-8});
    report.max_rel_err = std::max(report.max_rel_err, rel);
    if (rel >= tol) {
      report.pass = false;
      if (report.failures.size() < 32) {
        report.failures.push_back(name + "[" + std::to_string(i) + "] analytic=" +
                                  std::to_string(want) + " fd=" + std::to_string(got));
      }
    }
  };

  Vector<Scalar> theta = params.flatten();
  const Vector<Scalar> dtheta = analytic.theta.flatten();
  for (Index i = 0; i < theta.size(); ++i) {
    const Scalar orig = theta[i];
    theta[i] = orig + static_cast<Scalar>(h);
    params.unflatten(theta);
    const double up = eval(params, arch);
    theta[i] = orig - static_cast<Scalar>(h);
    params.unflatten(theta);
    const double dn = eval(params, arch);
    theta[i] = orig;
    record("theta", i, (up - dn) / (2 * h), static_cast<double>(dtheta[i]));
  }
  params.unflatten(theta);

  Vector<Scalar> lam = arch.flatten();
  const Vector<Scalar> dlam = analytic.lambda.flatten();
  for (Index i = 0; i < lam.size(); ++i) {
    const Scalar orig = lam[i];
    lam[i] = orig + static_cast<Scalar>(h);
    arch.unflatten(lam);
    const double up = eval(params, arch);
    lam[i] = orig - static_cast<Scalar>(h);
    arch.unflatten(lam);
    const double dn = eval(params, arch);
    lam[i] = orig;
    record("lambda", i, (up - dn) / (2 * h), static_cast<double>(dlam[i]));
  }
  return report;
}

}  // namespace hetnr
