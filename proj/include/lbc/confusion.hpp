#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <thread>
#include <vector>

#include "lbc/common.hpp"
#include "lbc/dataset.hpp"
#include "lbc/grid.hpp"
#include "lbc/nn.hpp"

namespace lbc {

// ---------------------------------------------------------------------------
// Losses and error rates (class-balanced: each side is averaged over its own
// sample count before the two sides are combined with weight 1/2 each).
// ---------------------------------------------------------------------------

// Per-sample classification error under the argmax decision rule. An exact
// score tie is scored as half an error regardless of the true side, so a
// completely uninformative classifier sits at error rate 1/2.
inline double classification_error(double score_right, double score_left, bool truth_right) {
    if (score_right == score_left) return 0.5;
    const bool predicted_right = score_right > score_left;
    return predicted_right == truth_right ? 0.0 : 1.0;
}

// L_k = -1/2 [ mean log p(<|x) over the lower side + mean log p(>|x) over the
// upper side ], taking the per-sample probability of the sample's true side.
inline double balanced_bce_loss(std::span<const double> p_true_left,
                                std::span<const double> p_true_right) {
    if (p_true_left.empty() || p_true_right.empty())
        throw UsageError("balanced_bce_loss: both sides of a splitting must be non-empty");
    std::vector<double> logs;
    logs.reserve(std::max(p_true_left.size(), p_true_right.size()));
    for (double p : p_true_left) logs.push_back(std::log(p));
    const double mean_left = pairwise_mean(logs);
    logs.clear();
    for (double p : p_true_right) logs.push_back(std::log(p));
    const double mean_right = pairwise_mean(logs);
    return -0.5 * (mean_left + mean_right);
}

// L = (1/K) sum_k L_k.
inline double multi_task_loss(std::span<const double> per_splitting_losses) {
    if (per_splitting_losses.empty()) throw UsageError("multi_task_loss: need at least one task");
    return pairwise_mean(per_splitting_losses);
}

// p_err_k from per-sample predicted probabilities of the ">" side, grouped by
// the samples' true side.
inline double error_rate(std::span<const double> p_right_for_left_side,
                         std::span<const double> p_right_for_right_side) {
    if (p_right_for_left_side.empty() || p_right_for_right_side.empty())
        throw UsageError("error_rate: both sides of a splitting must be non-empty");
    std::vector<double> errs;
    errs.reserve(std::max(p_right_for_left_side.size(), p_right_for_right_side.size()));
    for (double p : p_right_for_left_side)
        errs.push_back(classification_error(p, 1.0 - p, false));
    const double mean_left = pairwise_mean(errs);
    errs.clear();
    for (double p : p_right_for_right_side)
        errs.push_back(classification_error(p, 1.0 - p, true));
    const double mean_right = pairwise_mean(errs);
    return 0.5 * (mean_left + mean_right);
}

// ---------------------------------------------------------------------------
// Confusion curve
// ---------------------------------------------------------------------------

struct ConfusionCurve {
    std::vector<double> boundaries;  // theta*_k
    std::vector<double> p_err;       // one entry per splitting
};

struct CurveMinimum {
    std::size_t node = 0;
    double boundary = 0.0;
    double p_err = 0.0;
    bool tie = false;  // another node attains the same minimum
};

// Lowest error rate wins; exact ties resolve to the lowest index and are
// flagged. The full curve stays available so secondary minima remain visible.
inline CurveMinimum confusion_minimum(const ConfusionCurve& curve) {
    if (curve.p_err.empty() || curve.p_err.size() != curve.boundaries.size())
        throw UsageError("confusion_minimum: empty or inconsistent curve");
    std::size_t best = 0;
    for (std::size_t i = 1; i < curve.p_err.size(); ++i)
        if (curve.p_err[i] < curve.p_err[best]) best = i;
    bool tie = false;
    for (std::size_t i = 0; i < curve.p_err.size(); ++i)
        if (i != best && curve.p_err[i] == curve.p_err[best]) tie = true;
    return {best, curve.boundaries[best], curve.p_err[best], tie};
}

// ---------------------------------------------------------------------------
// Validation evaluation
// ---------------------------------------------------------------------------

namespace detail {

// Error sums for each head over one contiguous range of grid points.
// sums[2h] collects lower-side samples, sums[2h+1] upper-side samples; all
// contributions are multiples of 1/2, so accumulation order cannot change
// the result and threaded evaluation is bit-identical to sequential.
inline void eval_errors_range(const nn::ModelState& model, const GriddedDataset& ds,
                              std::span<const std::size_t> nodes, std::size_t p_begin,
                              std::size_t p_end, std::span<double> sums) {
    constexpr std::size_t kChunk = 256;
    const std::size_t heads = nodes.size();
    Matrix chunk;
    for (std::size_t p = p_begin; p < p_end; ++p) {
        for (std::size_t i0 = 0; i0 < ds.valid_per_point; i0 += kChunk) {
            const std::size_t rows = std::min<std::size_t>(kChunk, ds.valid_per_point - i0);
            chunk.rows = rows;
            chunk.cols = ds.feature_dim;
            chunk.a.resize(rows * ds.feature_dim);
            for (std::size_t r = 0; r < rows; ++r) {
                const auto src = ds.valid_row(p, i0 + r);
                double* dst = chunk.row(r);
                for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j];
            }
            const Matrix logits = nn::forward_logits(model, chunk);
            for (std::size_t r = 0; r < rows; ++r) {
                const double* zr = logits.row(r);
                for (std::size_t h = 0; h < heads; ++h) {
                    const bool truth_right = p > nodes[h];
                    sums[2 * h + (truth_right ? 1 : 0)] +=
                        classification_error(zr[h], 0.0, truth_right);
                }
            }
        }
    }
}

}  // namespace detail

// Validation error rate per head, head h judging splitting nodes[h].
// Evaluation shards grid points across threads with read-only model access.
inline std::vector<double> eval_errors(const nn::ModelState& model, const GriddedDataset& ds,
                                       std::span<const std::size_t> nodes, int threads = 1) {
    const std::size_t heads = nodes.size();
    if (heads != model.spec.output_heads)
        throw UsageError("eval_errors: one node per model head required");
    if (ds.valid_per_point == 0) throw UsageError("eval_errors: dataset has no validation samples");
    for (std::size_t k : nodes)
        if (k >= ds.splittings()) throw UsageError("eval_errors: node index out of range");

    const std::size_t points = ds.points();
    std::vector<double> sums(2 * heads, 0.0);
    const std::size_t want = threads < 1 ? 1 : static_cast<std::size_t>(threads);
    const std::size_t n_shards = std::min(want, points);
    if (n_shards <= 1) {
        detail::eval_errors_range(model, ds, nodes, 0, points, sums);
    } else {
        std::vector<std::vector<double>> shard_sums(n_shards,
                                                    std::vector<double>(2 * heads, 0.0));
        std::vector<std::thread> workers;
        workers.reserve(n_shards);
        for (std::size_t s = 0; s < n_shards; ++s) {
            const std::size_t p_begin = points * s / n_shards;
            const std::size_t p_end = points * (s + 1) / n_shards;
            workers.emplace_back([&, s, p_begin, p_end] {
                detail::eval_errors_range(model, ds, nodes, p_begin, p_end, shard_sums[s]);
            });
        }
        for (auto& w : workers) w.join();
        for (const auto& part : shard_sums)
            for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += part[i];
    }

    std::vector<double> p_err(heads);
    const double m_valid = static_cast<double>(ds.valid_per_point);
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t k = nodes[h];
        const double n_left = static_cast<double>(k + 1) * m_valid;
        const double n_right = static_cast<double>(points - k - 1) * m_valid;
        p_err[h] = 0.5 * (sums[2 * h] / n_left + sums[2 * h + 1] / n_right);
    }
    return p_err;
}

inline ConfusionCurve eval_validation_curve(const nn::ModelState& model,
                                            const GriddedDataset& ds, int threads = 1) {
    std::vector<std::size_t> nodes(ds.splittings());
    std::iota(nodes.begin(), nodes.end(), std::size_t{0});
    ConfusionCurve curve;
    for (const auto& s : make_splittings(ds.grid)) curve.boundaries.push_back(s.boundary);
    curve.p_err = eval_errors(model, ds, nodes, threads);
    return curve;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainSchedule {
    std::uint32_t epochs = 50;
    std::uint32_t batch_size = 512;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct EpochRecord {
    std::uint32_t epoch = 0;               // 0 = untrained model
    std::vector<double> train_loss;        // per head; NaN when never defined
    std::vector<double> valid_error;       // per head
};

struct TrainResult {
    nn::ModelState model;
    nn::AdamState adam;
    std::vector<std::size_t> nodes;        // splitting judged by each head
    std::vector<EpochRecord> history;      // entry per epoch, including epoch 0

    ConfusionCurve final_curve(const ParameterGrid& grid) const {
        ConfusionCurve curve;
        const auto splits = make_splittings(grid);
        for (std::size_t h = 0; h < nodes.size(); ++h)
            curve.boundaries.push_back(splits[nodes[h]].boundary);
        curve.p_err = history.back().valid_error;
        return curve;
    }
};

// Minibatch training of one model whose head h learns splitting nodes[h].
// The loss is the mean over heads of the class-balanced cross-entropy, with
// per-side normalization taken from the side counts inside each batch; a
// head whose batch lacks one side contributes nothing for that batch.
inline TrainResult train_heads(const GriddedDataset& ds, const nn::NetworkSpec& spec,
                               const nn::AdamState& adam_opts, const TrainSchedule& sched,
                               std::vector<std::size_t> nodes) {
    spec.validate();
    adam_opts.validate();
    if (nodes.size() != spec.output_heads)
        throw UsageError("train: model has " + std::to_string(spec.output_heads) +
                         " heads but " + std::to_string(nodes.size()) + " nodes were requested");
    for (std::size_t k : nodes)
        if (k >= ds.splittings()) throw UsageError("train: node index out of range");
    if (spec.input_dim != ds.feature_dim)
        throw UsageError("train: model input_dim " + std::to_string(spec.input_dim) +
                         " != dataset feature_dim " + std::to_string(ds.feature_dim));
    if (ds.train_per_point == 0) throw UsageError("train: dataset has no training samples");
    if (sched.batch_size == 0) throw UsageError("train: batch size must be positive");

    const std::size_t heads = nodes.size();
    const std::size_t points = ds.points();
    const std::size_t n_train = ds.train_total();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    TrainResult result;
    result.model = nn::init_model(spec);
    result.adam = adam_opts;
    result.nodes = nodes;
    result.history.push_back(
        {0, std::vector<double>(heads, nan), eval_errors(result.model, ds, nodes, sched.threads)});

    std::vector<std::uint32_t> perm(n_train);
    std::iota(perm.begin(), perm.end(), 0u);
    Rng shuffle_rng(derive_seed(sched.seed, 1));

    Matrix batch;
    Matrix dlogits;
    nn::ForwardCache cache;
    std::vector<std::size_t> pidx;
    std::vector<std::size_t> left_count(points);
    std::vector<double> terms;

    for (std::uint32_t epoch = 1; epoch <= sched.epochs; ++epoch) {
        shuffle(std::span<std::uint32_t>(perm), shuffle_rng);
        std::vector<double> loss_sum(heads, 0.0);
        std::vector<std::size_t> loss_cnt(heads, 0);

        for (std::size_t start = 0; start < n_train; start += sched.batch_size) {
            const std::size_t rows = std::min<std::size_t>(sched.batch_size, n_train - start);
            batch.rows = rows;
            batch.cols = ds.feature_dim;
            batch.a.resize(rows * ds.feature_dim);
            pidx.assign(rows, 0);
            std::fill(left_count.begin(), left_count.end(), 0);
            for (std::size_t r = 0; r < rows; ++r) {
                const std::uint32_t g = perm[start + r];
                const std::size_t p = g / ds.train_per_point;
                const auto src = ds.train_row(p, g % ds.train_per_point);
                double* dst = batch.row(r);
                for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j];
                pidx[r] = p;
                ++left_count[p];
            }
            // prefix sums: left_count[k] = batch rows with grid index <= k
            for (std::size_t p = 1; p < points; ++p) left_count[p] += left_count[p - 1];

            const Matrix logits = nn::forward_logits(result.model, batch, &cache);
            dlogits.rows = rows;
            dlogits.cols = heads;
            dlogits.a.assign(rows * heads, 0.0);

            bool stepped = false;
            for (std::size_t h = 0; h < heads; ++h) {
                const std::size_t k = nodes[h];
                const std::size_t n_left = left_count[k];
                const std::size_t n_right = rows - n_left;
                if (n_left == 0 || n_right == 0) continue;
                stepped = true;
                double mean_left, mean_right;
                terms.clear();
                for (std::size_t r = 0; r < rows; ++r)
                    if (pidx[r] <= k) terms.push_back(nn::softplus(logits(r, h)));
                mean_left = pairwise_mean(terms);
                terms.clear();
                for (std::size_t r = 0; r < rows; ++r)
                    if (pidx[r] > k) terms.push_back(nn::softplus(-logits(r, h)));
                mean_right = pairwise_mean(terms);
                const double loss_h = 0.5 * (mean_left + mean_right);
                if (!std::isfinite(loss_h))
                    throw NumericalError("training loss became non-finite at epoch " +
                                         std::to_string(epoch));
                loss_sum[h] += loss_h;
                ++loss_cnt[h];
                const double scale_left = 1.0 / (2.0 * static_cast<double>(n_left) *
                                                 static_cast<double>(heads));
                const double scale_right = 1.0 / (2.0 * static_cast<double>(n_right) *
                                                  static_cast<double>(heads));
                for (std::size_t r = 0; r < rows; ++r) {
                    const double s = nn::sigmoid(logits(r, h));
                    dlogits(r, h) = pidx[r] > k ? (s - 1.0) * scale_right : s * scale_left;
                }
            }
            if (!stepped) continue;
            const nn::ParamSet grads = nn::backward(result.model, cache, dlogits);
            nn::adam_step(result.model, grads, result.adam);
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss.resize(heads);
        for (std::size_t h = 0; h < heads; ++h)
            record.train_loss[h] =
                loss_cnt[h] ? loss_sum[h] / static_cast<double>(loss_cnt[h]) : nan;
        record.valid_error = eval_errors(result.model, ds, nodes, sched.threads);
        result.history.push_back(std::move(record));
    }
    return result;
}

// One classifier with K heads, head k judging splitting k.
inline TrainResult train_multi_task(const GriddedDataset& ds, const nn::NetworkSpec& spec,
                                    const nn::AdamState& adam_opts, const TrainSchedule& sched) {
    if (spec.output_heads != ds.splittings())
        throw UsageError("train_multi_task: model has " + std::to_string(spec.output_heads) +
                         " heads but the grid defines " + std::to_string(ds.splittings()) +
                         " splittings");
    std::vector<std::size_t> nodes(ds.splittings());
    std::iota(nodes.begin(), nodes.end(), std::size_t{0});
    return train_heads(ds, spec, adam_opts, sched, std::move(nodes));
}

// Classic variant: a separate binary classifier for one splitting.
inline TrainResult train_single_task(const GriddedDataset& ds, std::size_t node,
                                     const nn::NetworkSpec& spec,
                                     const nn::AdamState& adam_opts,
                                     const TrainSchedule& sched) {
    if (spec.output_heads != 1)
        throw UsageError("train_single_task: spec must have exactly one output head");
    return train_heads(ds, spec, adam_opts, sched, {node});
}

}  // namespace lbc
