#pragma once

#include "maclab/channel.hpp"
#include "maclab/core.hpp"

#include <Eigen/Core>

#include <array>
#include <functional>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace maclab {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct AdamHyper {
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;

    friend bool operator==(const AdamHyper&, const AdamHyper&) = default;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update at step t (t >= 1). Grows empty state to the parameter size.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamHyper& hyper,
               std::int64_t t);

struct DaeConfig {
    Scenario scenario;
    double train_snr_db = 13.0;
    int num_const = 2048;
    int max_epochs = 32768;
    int patience = 4000;
    std::vector<int> hidden_sizes{128, 64, 32};
    AdamHyper adam;
    RngSeed init_seed{1, 0};
    RngSeed noise_seed{1, 1};
    double eps_norm = 1e-8;

    friend bool operator==(const DaeConfig&, const DaeConfig&) = default;
};

/// Throws InvalidArgument (or a scenario error) when the config breaks its invariants.
void validate_config(const DaeConfig& config);

/// Offsets of every parameter block inside the flat parameter vector.
/// Per user: encoder weights (k_i x 2, row-major), encoder bias (2), raw scales (2).
/// Then per decoder layer: weights (in x out, row-major), bias (out).
struct ParamLayout {
    struct Block {
        std::size_t offset = 0;
        int rows = 0;
        int cols = 0;
        std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
    };
    std::vector<Block> enc_weight, enc_bias, scale_raw;
    std::vector<Block> dec_weight, dec_bias;
    std::size_t total = 0;

    ParamLayout(const Scenario& s, std::span<const int> hidden_sizes);
};

/// Rows enumerate all joint bit patterns (joint-label order, MSB first), repeated num_const times.
RowMatrix build_batch(const Scenario& s, int num_const);

/// relu(bits * weights + bias) per row.
RowMatrix encoder_forward(const Eigen::Ref<const RowMatrix>& weights, const Eigen::Ref<const Eigen::RowVectorXd>& bias,
                          const Eigen::Ref<const RowMatrix>& bits);

struct PowerCache {
    Eigen::RowVector2d mean = Eigen::RowVector2d::Zero();
    double power = 0.0;  ///< mean |centered symbol|^2, before eps
    double sigma = 1.0;  ///< sqrt(power + eps)
    Eigen::RowVector2d scale = Eigen::RowVector2d::Ones();
    RowMatrix normalized;  ///< centered / sigma, before the learned scale
    bool collapsed = false;
};

struct PowerLayerOutput {
    RowMatrix symbols;
    PowerCache cache;
};

/// Batch centering, power normalization, then division of dimension d by 1 + relu(raw_d).
PowerLayerOutput power_layers(const Eigen::Ref<const RowMatrix>& raw, const Eigen::Ref<const Eigen::RowVector2d>& scale_raw,
                              double eps_norm);

inline constexpr double kCollapsePower = 1e-10;

/// Everything backward() needs from one forward pass.
struct ForwardPass {
    RowMatrix bits;
    std::vector<RowMatrix> enc_pre;  ///< per user, before ReLU
    std::vector<RowMatrix> enc_out;  ///< per user, after ReLU
    std::vector<PowerCache> power;
    std::vector<RowMatrix> symbols;  ///< per user, after power layers
    RowMatrix received;
    std::vector<RowMatrix> dec_pre;  ///< per decoder layer, pre-activation
    std::vector<RowMatrix> dec_act;  ///< per decoder layer, post-activation (last = sigmoid output z)
    double loss = 0.0;
    bool collapsed = false;
};

ForwardPass forward(const DaeConfig& config, const ParamLayout& layout, std::span<const double> params,
                    const RowMatrix& bits, std::span<const ComplexPoint> noise);

inline constexpr double kProbClamp = 1e-12;

/// Mean binary cross-entropy, natural log, z clamped to [1e-12, 1 - 1e-12].
double bce_loss(const Eigen::Ref<const RowMatrix>& z, const Eigen::Ref<const RowMatrix>& bits);

/// Exact gradient of the forward pass loss with respect to every parameter.
std::vector<double> backward(const DaeConfig& config, const ParamLayout& layout, std::span<const double> params,
                             const ForwardPass& pass);

/// Glorot-uniform affine weights, zero biases, raw scales -1.
std::vector<double> init_params(const DaeConfig& config, const ParamLayout& layout);

struct ExtractionStats {
    std::vector<Eigen::RowVector2d> mean;
    std::vector<double> power;
};

struct TrainingHistory {
    std::vector<double> loss;
    int best_epoch = 0;
    std::string stop_reason;
};

class DaeModel {
public:
    DaeModel(DaeConfig config, std::vector<double> params);

    const DaeConfig& config() const noexcept { return config_; }
    const ParamLayout& layout() const noexcept { return layout_; }
    std::span<const double> params() const noexcept { return params_; }
    const std::optional<ExtractionStats>& stats() const noexcept { return stats_; }
    const TrainingHistory& history() const noexcept { return history_; }
    const AdamState& adam_state() const noexcept { return adam_; }
    bool finalized() const noexcept { return stats_.has_value(); }

    /// Freeze extraction statistics from one pass over every user's bit patterns.
    void finalize();
    void set_history(TrainingHistory history) { history_ = std::move(history); }
    void set_adam_state(AdamState state) { adam_ = std::move(state); }
    void set_stats(ExtractionStats stats);

private:
    DaeConfig config_;
    ParamLayout layout_;
    std::vector<double> params_;
    std::optional<ExtractionStats> stats_;
    TrainingHistory history_;
    AdamState adam_;
};

/// Patience-based early stopping on the best observed loss.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience);

    /// Record the loss of epoch (1-based). Returns true when it is a new best.
    bool observe(int epoch, double loss);
    bool should_stop(int epoch) const { return epoch - best_epoch_ >= patience_; }
    int best_epoch() const noexcept { return best_epoch_; }
    double best_loss() const noexcept { return best_loss_; }

private:
    int patience_;
    int best_epoch_ = 0;
    double best_loss_ = std::numeric_limits<double>::infinity();
};

/// Called after every epoch with (epoch, loss, best_epoch).
using TrainObserver = std::function<void(int, double, int)>;

/// One full-batch Adam step per epoch with fresh noise; returns the best-loss snapshot, finalized.
DaeModel train(const DaeConfig& config, const TrainObserver& observer = {});

struct RestartResult {
    std::uint64_t init_stream = 0;
    double train_snr_db = 0.0;
    double validation_loss = 0.0;
    int epochs = 0;
    bool collapsed = false;
    bool duplicate_points = false;  ///< extracted sum constellation has coincident points
};

struct RestartSummary {
    std::vector<RestartResult> runs;
    std::size_t best = 0;
};

/// Multi-restart protocol: restart r uses init stream base+r and train SNR
/// snr_list[r % size]; the model with the lowest validation loss at
/// select_snr_db (fixed validation noise stream) wins. Restarts whose sum
/// constellation has coincident points rank after all others.
DaeModel train_restarts(const DaeConfig& base, int restarts, std::span<const double> snr_list, double select_snr_db,
                        RestartSummary* summary = nullptr, const TrainObserver& observer = {});

double validation_loss(const DaeModel& model, double snr_db, int num_const);

std::vector<Constellation> extract_constellations(const DaeModel& model);

std::vector<double> decode(const DaeModel& model, ComplexPoint y);

/// Decoder pass over a batch; row t holds z for ys[t].
RowMatrix decode_batch(const DaeModel& model, std::span<const ComplexPoint> ys);

}  // namespace maclab
