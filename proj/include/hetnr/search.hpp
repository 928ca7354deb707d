#pragma once

#include <cstdint>
#include <functional>
#include <iostream>
#include <utility>
#include <vector>

#include "hetnr/model.hpp"
#include "hetnr/splits.hpp"

namespace hetnr {

enum class SearchStrategy { Unrolled, FirstOrder, Sampled };

struct SearchConfig {
  double lr_theta = 0.01;   // mu1: model-parameter step size
  double lr_lambda = 0.05;  // architecture-logit step size
  int max_epochs = 500;
  int patience = 10;
  SearchStrategy strategy = SearchStrategy::Unrolled;
  double fd_epsilon = 0.01;  // scale of the Hessian-vector finite difference
  std::uint64_t seed = 0;
};

struct ModelConfig {
  Index hidden = 64;
  double dropout = 0.2;
  double norm_epsilon = 1e-12;
};

struct SearchTrace {
  struct Epoch {
    double train_loss = 0;
    double valid_loss = 0;
    std::vector<VectorXd> mix_weights;  // per hop, sums to 1
  };
  std::vector<Epoch> epochs;
  Architecture final_arch;
  int epochs_run = 0;
  int best_epoch = -1;
};

// ---------------------------------------------------------------------------
// Bilevel gradient core (flat-vector form, reused by the toy-problem tests)
// ---------------------------------------------------------------------------

template <class Scalar>
struct BilevelProblem {
  using Vec = Vector<Scalar>;
  std::function<Vec(const Vec& theta, const Vec& lambda)> grad_theta_train;
  std::function<Vec(const Vec& theta, const Vec& lambda)> grad_lambda_train;
  // returns (d/dtheta, d/dlambda) of the validation loss
  std::function<std::pair<Vec, Vec>(const Vec& theta, const Vec& lambda)> grads_valid;
};

/// One-step-unrolled architecture gradient: evaluate the validation gradient
/// at theta' = theta - lr * grad_theta_train, then subtract the mixed
/// second-order term approximated by central differences around theta with
/// step fd_epsilon / ||grad_theta_valid||. A zero validation gradient makes
/// that step undefined; the second-order term is skipped (flag set).
template <class Scalar>
Vector<Scalar> unrolled_lambda_gradient(const BilevelProblem<Scalar>& problem,
                                        const Vector<Scalar>& theta,
                                        const Vector<Scalar>& lambda,
                                        Scalar lr_theta, Scalar fd_epsilon,
                                        bool* second_order_skipped = nullptr) {
  if (second_order_skipped) *second_order_skipped = false;
  const Vector<Scalar> gt = problem.grad_theta_train(theta, lambda);
  const Vector<Scalar> unrolled = theta - lr_theta * gt;
  auto [gv_theta, gv_lambda] = problem.grads_valid(unrolled, lambda);

  const Scalar norm = gv_theta.norm();
  if (!(norm > Scalar(0))) {
    if (second_order_skipped) *second_order_skipped = true;
    return gv_lambda;
  }
  const Scalar eps = fd_epsilon / norm;
  const Vector<Scalar> plus = problem.grad_lambda_train(theta + eps * gv_theta, lambda);
  const Vector<Scalar> minus = problem.grad_lambda_train(theta - eps * gv_theta, lambda);
  return gv_lambda - lr_theta * (plus - minus) / (Scalar(2) * eps);
}

// ---------------------------------------------------------------------------
// Alternating updates on the model
// ---------------------------------------------------------------------------

namespace detail {

template <class Scalar>
ForwardConfig train_cfg(const Instance<Scalar>& inst, const ModelConfig& mc) {
  return ForwardConfig{inst.ops.space.num_hops, mc.dropout, true, mc.norm_epsilon};
}

template <class Scalar>
ForwardConfig eval_cfg(const Instance<Scalar>& inst, const ModelConfig& mc) {
  return ForwardConfig{inst.ops.space.num_hops, 0.0, false, mc.norm_epsilon};
}

template <class Scalar>
Gradients<Scalar> step_grads(const Instance<Scalar>& inst,
                             const ModelParams<Scalar>& params,
                             const ArchParams<Scalar>& arch,
                             const std::vector<Index>& mask, GradWrt wrt,
                             const ForwardConfig& cfg, std::uint64_t dropout_seed,
                             const std::vector<int>* picks) {
  return picks ? grads_sampled(inst, params, arch, *picks, cfg, mask, wrt, dropout_seed)
               : grads(inst, params, arch, cfg, mask, wrt, dropout_seed);
}

}  // namespace detail

/// theta <- theta - lr * grad of the training loss, lambda frozen
/// (plain gradient descent; lr = 0 leaves theta untouched).
template <class Scalar>
ModelParams<Scalar> update_theta(const Instance<Scalar>& inst,
                                 const ModelParams<Scalar>& params,
                                 const ArchParams<Scalar>& arch,
                                 const std::vector<Index>& train_mask,
                                 double lr_theta, const ModelConfig& mc,
                                 std::uint64_t step_seed,
                                 const std::vector<int>* picks = nullptr) {
  auto g = detail::step_grads(inst, params, arch, train_mask, GradWrt::Theta,
                              detail::train_cfg(inst, mc),
                              derive_seed(step_seed, "dropout-theta"), picks);
  if (!g.theta.all_finite()) throw NonFiniteGradient("theta gradient is not finite");
  ModelParams<Scalar> next = params;
  next.axpy(static_cast<Scalar>(-lr_theta), g.theta);
  return next;
}

/// lambda <- lambda - lr * hypergradient. Unrolled strategy uses
/// unrolled_lambda_gradient; FirstOrder evaluates the validation gradient at
/// the current theta; Sampled does the same through a single per-hop
/// candidate (`picks`) weighted by its mixture probability. The training
/// side keeps one dropout mask for all of its evaluations within the step so
/// the finite difference sees a fixed function.
template <class Scalar>
ArchParams<Scalar> update_lambda(const Instance<Scalar>& inst,
                                 const ModelParams<Scalar>& params,
                                 const ArchParams<Scalar>& arch,
                                 const std::vector<Index>& train_mask,
                                 const std::vector<Index>& valid_mask,
                                 const SearchConfig& cfg, const ModelConfig& mc,
                                 std::uint64_t step_seed,
                                 const std::vector<int>* picks = nullptr) {
  const ForwardConfig tc = detail::train_cfg(inst, mc);
  const ForwardConfig ec = detail::eval_cfg(inst, mc);
  const std::uint64_t drop_seed = derive_seed(step_seed, "dropout-lambda");

  ArchParams<Scalar> next = arch;
  Vector<Scalar> grad;

  if (cfg.strategy == SearchStrategy::Unrolled) {
    ModelParams<Scalar> theta_buf = params;
    ArchParams<Scalar> lambda_buf = arch;
    BilevelProblem<Scalar> problem;
    problem.grad_theta_train = [&](const Vector<Scalar>& t, const Vector<Scalar>& l) {
      theta_buf.unflatten(t);
      lambda_buf.unflatten(l);
      return detail::step_grads(inst, theta_buf, lambda_buf, train_mask,
                                GradWrt::Theta, tc, drop_seed, picks)
          .theta.flatten();
    };
    problem.grad_lambda_train = [&](const Vector<Scalar>& t, const Vector<Scalar>& l) {
      theta_buf.unflatten(t);
      lambda_buf.unflatten(l);
      return detail::step_grads(inst, theta_buf, lambda_buf, train_mask,
                                GradWrt::Lambda, tc, drop_seed, picks)
          .lambda.flatten();
    };
    problem.grads_valid = [&](const Vector<Scalar>& t, const Vector<Scalar>& l) {
      theta_buf.unflatten(t);
      lambda_buf.unflatten(l);
      auto g = detail::step_grads(inst, theta_buf, lambda_buf, valid_mask,
                                  GradWrt::Both, ec, 0, picks);
      return std::make_pair(g.theta.flatten(), g.lambda.flatten());
    };

    bool skipped = false;
    grad = unrolled_lambda_gradient(problem, params.flatten(), arch.flatten(),
                                    static_cast<Scalar>(cfg.lr_theta),
                                    static_cast<Scalar>(cfg.fd_epsilon), &skipped);
    if (skipped) {
      std::cerr << "[search] validation gradient vanished; "
                   "skipping second-order term this step\n";
    }
  } else {
    grad = detail::step_grads(inst, params, arch, valid_mask, GradWrt::Lambda,
                              ec, 0, picks)
               .lambda.flatten();
  }

  if (!grad.allFinite()) throw NonFiniteGradient("lambda gradient is not finite");
  Vector<Scalar> flat = arch.flatten() - static_cast<Scalar>(cfg.lr_lambda) * grad;
  next.unflatten(flat);
  return next;
}

/// Per-hop argmax of the mixture weights; ties break to the lowest candidate
/// index (index 0 is the zero option, so an all-way tie drops the hop).
template <class Scalar>
Architecture discretize(const ArchParams<Scalar>& arch, const SearchSpace& space) {
  if (arch.per_hop.size() != space.per_hop.size()) {
    throw InconsistentSpace("arch params do not match search space");
  }
  Architecture out;
  for (std::size_t k = 0; k < space.per_hop.size(); ++k) {
    const auto& lam = arch.per_hop[k];
    if (lam.size() != static_cast<Index>(space.per_hop[k].size())) {
      throw InconsistentSpace("candidate count mismatch at hop " + std::to_string(k + 1));
    }
    Index best = 0;
    for (Index c = 1; c < lam.size(); ++c) {
      if (lam[c] > lam[best]) best = c;
    }
    out.per_hop.push_back(space.per_hop[k][static_cast<std::size_t>(best)]);
  }
  return out;
}

template <class Scalar>
struct SearchOutcome {
  Architecture arch;
  SearchTrace trace;
  ModelParams<Scalar> best_params;  // supernet weights at the best epoch
  ArchParams<Scalar> best_lambda;
};

/// Alternating bilevel search: lambda starts at zero (uniform mixture), each
/// epoch updates lambda then theta, and the returned architecture is the
/// discretization of the best-validation-loss lambda. Early-stops after
/// `patience` epochs without validation improvement.
template <class Scalar>
SearchOutcome<Scalar> search(const Instance<Scalar>& inst, const HinGraph& graph,
                             const TargetTask& task, const Fold& fold,
                             const SearchConfig& cfg, const ModelConfig& mc) {
  ModelParams<Scalar> theta = init_params<Scalar>(
      graph, task, mc.hidden, derive_seed(cfg.seed, "init"));
  ArchParams<Scalar> lambda = ArchParams<Scalar>::zeros(inst.ops.space);

  SearchOutcome<Scalar> out;
  out.best_params = theta;
  out.best_lambda = lambda;
  double best_valid = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  const ForwardConfig ec = detail::eval_cfg(inst, mc);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const std::uint64_t step_seed = derive_seed(cfg.seed, "search", epoch);

    std::vector<int> picks;
    const std::vector<int>* picks_ptr = nullptr;
    if (cfg.strategy == SearchStrategy::Sampled) {
      auto rng = make_rng(cfg.seed, "sample", epoch);
      for (const auto& lam : lambda.per_hop) {
        Vector<Scalar> alpha = mixture_weights(lam);
        std::discrete_distribution<int> dist(alpha.data(), alpha.data() + alpha.size());
        picks.push_back(dist(rng));
      }
      picks_ptr = &picks;
    }

    lambda = update_lambda(inst, theta, lambda, fold.train, fold.valid, cfg, mc,
                           step_seed, picks_ptr);
    theta = update_theta(inst, theta, lambda, fold.train, cfg.lr_theta, mc,
                         step_seed, picks_ptr);

    const Matrix<Scalar> logits = forward(inst, theta, lambda, ec);
    const double train_loss = static_cast<double>(loss(logits, inst.labels, fold.train));
    const double valid_loss = static_cast<double>(loss(logits, inst.labels, fold.valid));

    SearchTrace::Epoch snap;
    snap.train_loss = train_loss;
    snap.valid_loss = valid_loss;
    for (const auto& lam : lambda.per_hop) {
      snap.mix_weights.push_back(mixture_weights(lam).template cast<double>());
    }
    out.trace.epochs.push_back(std::move(snap));

    if (valid_loss < best_valid) {
      best_valid = valid_loss;
      out.best_lambda = lambda;
      out.best_params = theta;
      out.trace.best_epoch = epoch;
      bad_epochs = 0;
    } else if (++bad_epochs >= cfg.patience) {
      break;
    }
  }

  out.trace.epochs_run = static_cast<int>(out.trace.epochs.size());
  out.arch = discretize(out.best_lambda, inst.ops.space);
  out.trace.final_arch = out.arch;
  return out;
}

// ---------------------------------------------------------------------------
// Selection frequencies
// ---------------------------------------------------------------------------

struct FrequencyTable {
  struct HopEntry {
    HopCandidate candidate;
    double frequency = 0;
  };
  std::vector<std::vector<HopEntry>> hop_wise;  // space candidate order
  std::vector<std::pair<Architecture, double>> model_wise;  // sorted, see impl
};

/// Hop-wise counts are normalized independently per hop; model-wise counts
/// over whole architectures. Every table sums to 1 within its scope.
FrequencyTable selection_frequency(const std::vector<Architecture>& runs,
                                   const SearchSpace& space);

/// Per-hop argmax of the hop-wise table (ties to the lower candidate index).
Architecture hop_wise_modal(const FrequencyTable& table, const SearchSpace& space);
/// Most frequent full architecture (ties to the lexicographically smallest
/// candidate-index tuple).
Architecture model_wise_modal(const FrequencyTable& table);

}  // namespace hetnr
