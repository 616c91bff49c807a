#include "maclab/dae.hpp"

#include "maclab/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace maclab {

namespace {

using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;
using ConstRowVecMap = Eigen::Map<const Eigen::RowVectorXd>;
using RowVecMap = Eigen::Map<Eigen::RowVectorXd>;

// Eigen picks scalar or packet kernels from the destination/source address, and the
// two sum in different orders. Parameters and gradients live in std::vector, so
// everything is evaluated in aligned Eigen storage and copied across.
RowMatrix view(std::span<const double> params, const ParamLayout::Block& b)
{
    return ConstRowMap(params.data() + b.offset, b.rows, b.cols);
}

RowMap view(std::span<double> params, const ParamLayout::Block& b)
{
    return RowMap(params.data() + b.offset, b.rows, b.cols);
}

Eigen::RowVectorXd view_vec(std::span<const double> params, const ParamLayout::Block& b)
{
    return ConstRowVecMap(params.data() + b.offset, static_cast<Eigen::Index>(b.size()));
}

RowVecMap view_vec(std::span<double> params, const ParamLayout::Block& b)
{
    return RowVecMap(params.data() + b.offset, static_cast<Eigen::Index>(b.size()));
}

Eigen::RowVector2d scale_factors(const Eigen::Ref<const Eigen::RowVector2d>& raw)
{
    return Eigen::RowVector2d(1.0 + std::max(raw[0], 0.0), 1.0 + std::max(raw[1], 0.0));
}

int user_column(const Scenario& s, std::size_t user)
{
    int col = 0;
    for (std::size_t j = 0; j < user; ++j)
        col += s.bits[j];
    return col;
}

/// Bit patterns 0..2^k-1 of one user, MSB first.
RowMatrix user_patterns(int k)
{
    const Eigen::Index n = Eigen::Index{1} << k;
    RowMatrix out(n, k);
    for (Eigen::Index r = 0; r < n; ++r)
        for (int j = 0; j < k; ++j)
            out(r, j) = static_cast<double>((r >> (k - 1 - j)) & 1);
    return out;
}

RowMatrix decoder_forward(const ParamLayout& layout, std::span<const double> params, RowMatrix x,
                          std::vector<RowMatrix>* pre, std::vector<RowMatrix>* act)
{
    const std::size_t layers = layout.dec_weight.size();
    for (std::size_t l = 0; l < layers; ++l) {
        RowMatrix z = x * view(params, layout.dec_weight[l]);
        z.rowwise() += view_vec(params, layout.dec_bias[l]);
        if (pre)
            pre->push_back(z);
        if (l + 1 < layers)
            x = z.cwiseMax(0.0);
        else
            x = (1.0 + (-z.array()).exp()).inverse().matrix();
        if (act)
            act->push_back(x);
    }
    return x;
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamHyper& hyper,
               std::int64_t t)
{
    if (t < 1)
        throw Error(ErrorCode::InvalidArgument, "Adam step index starts at 1");
    if (grads.size() != params.size())
        throw Error(ErrorCode::ShapeMismatch, "gradient and parameter sizes differ");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw Error(ErrorCode::ShapeMismatch, "Adam state does not match parameter size");
    const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grads[i];
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= hyper.step_size * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
    state.step = t;
}

void validate_config(const DaeConfig& c)
{
    validate_scenario(c.scenario);
    if (c.num_const < 1)
        throw Error(ErrorCode::InvalidArgument, "num_const must be at least 1");
    if (c.max_epochs < 1)
        throw Error(ErrorCode::InvalidArgument, "max_epochs must be at least 1");
    if (c.patience < 1 || c.patience > c.max_epochs)
        throw Error(ErrorCode::InvalidArgument, "patience must be in [1, max_epochs]");
    if (c.hidden_sizes.empty())
        throw Error(ErrorCode::InvalidArgument, "decoder needs at least one hidden layer");
    for (int h : c.hidden_sizes)
        if (h < 1)
            throw Error(ErrorCode::InvalidArgument, "hidden layer sizes must be positive");
    if (!(c.eps_norm >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "eps_norm must be non-negative");
    if (!std::isfinite(c.train_snr_db))
        throw Error(ErrorCode::InvalidArgument, "training SNR must be finite");
    if (c.num_const * c.scenario.joint_size() < 2)
        throw Error(ErrorCode::InvalidArgument, "training batch needs at least two rows");
}

ParamLayout::ParamLayout(const Scenario& s, std::span<const int> hidden_sizes)
{
    auto take = [this](int rows, int cols) {
        Block b{total, rows, cols};
        total += b.size();
        return b;
    };
    for (int k : s.bits) {
        enc_weight.push_back(take(k, 2));
        enc_bias.push_back(take(1, 2));
        scale_raw.push_back(take(1, 2));
    }
    int in = 2;
    std::vector<int> sizes(hidden_sizes.begin(), hidden_sizes.end());
    sizes.push_back(s.total_bits());
    for (int out : sizes) {
        dec_weight.push_back(take(in, out));
        dec_bias.push_back(take(1, out));
        in = out;
    }
}

RowMatrix build_batch(const Scenario& s, int num_const)
{
    validate_scenario(s);
    if (num_const < 1)
        throw Error(ErrorCode::InvalidArgument, "num_const must be at least 1");
    const int width = s.total_bits();
    const auto patterns = static_cast<Eigen::Index>(s.joint_size());
    RowMatrix out(patterns * num_const, width);
    for (int copy = 0; copy < num_const; ++copy)
        for (Eigen::Index p = 0; p < patterns; ++p)
            for (int j = 0; j < width; ++j)
                out(copy * patterns + p, j) = static_cast<double>((p >> (width - 1 - j)) & 1);
    return out;
}

RowMatrix encoder_forward(const Eigen::Ref<const RowMatrix>& weights, const Eigen::Ref<const Eigen::RowVectorXd>& bias,
                          const Eigen::Ref<const RowMatrix>& bits)
{
    RowMatrix pre = bits * weights;
    pre.rowwise() += bias;
    return pre.cwiseMax(0.0);
}

PowerLayerOutput power_layers(const Eigen::Ref<const RowMatrix>& raw, const Eigen::Ref<const Eigen::RowVector2d>& scale_raw,
                              double eps_norm)
{
    if (raw.rows() < 2 || raw.cols() != 2)
        throw Error(ErrorCode::ShapeMismatch, "power layers need a batch of at least two I/Q rows");
    PowerLayerOutput out;
    PowerCache& c = out.cache;
    const auto n = static_cast<double>(raw.rows());
    c.mean = raw.colwise().sum() / n;
    RowMatrix centered = raw.rowwise() - c.mean;
    c.power = centered.squaredNorm() / n;
    c.sigma = std::sqrt(c.power + eps_norm);
    c.collapsed = c.power < kCollapsePower;
    c.scale = scale_factors(scale_raw);
    c.normalized = centered / c.sigma;
    out.symbols = c.normalized.array().rowwise() / c.scale.array();
    return out;
}

double bce_loss(const Eigen::Ref<const RowMatrix>& z, const Eigen::Ref<const RowMatrix>& bits)
{
    if (z.rows() != bits.rows() || z.cols() != bits.cols())
        throw Error(ErrorCode::ShapeMismatch, "probabilities and bits differ in shape");
    double acc = 0.0;
    for (Eigen::Index r = 0; r < z.rows(); ++r)
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            const double p = std::clamp(z(r, j), kProbClamp, 1.0 - kProbClamp);
            const double b = bits(r, j);
            acc -= b * std::log(p) + (1.0 - b) * std::log(1.0 - p);
        }
    return acc / static_cast<double>(z.size());
}

ForwardPass forward(const DaeConfig& config, const ParamLayout& layout, std::span<const double> params,
                    const RowMatrix& bits, std::span<const ComplexPoint> noise)
{
    const Scenario& s = config.scenario;
    if (params.size() != layout.total)
        throw Error(ErrorCode::ShapeMismatch, "parameter vector does not match layout");
    if (bits.cols() != s.total_bits())
        throw Error(ErrorCode::ShapeMismatch, "bit batch width does not match the scenario");
    if (noise.size() != static_cast<std::size_t>(bits.rows()))
        throw Error(ErrorCode::ShapeMismatch, "noise batch length does not match the bit batch");

    ForwardPass pass;
    pass.bits = bits;
    pass.received = RowMatrix::Zero(bits.rows(), 2);
    for (std::size_t i = 0; i < s.users(); ++i) {
        const auto cols = bits.middleCols(user_column(s, i), s.bits[i]);
        RowMatrix pre = cols * view(params, layout.enc_weight[i]);
        pre.rowwise() += view_vec(params, layout.enc_bias[i]);
        RowMatrix post = pre.cwiseMax(0.0);
        const Eigen::RowVector2d raw_scale = view_vec(params, layout.scale_raw[i]);
        PowerLayerOutput pl = power_layers(post, raw_scale, config.eps_norm);
        pass.collapsed = pass.collapsed || pl.cache.collapsed;
        pass.received += std::sqrt(s.alpha[i]) * pl.symbols;
        pass.enc_pre.push_back(std::move(pre));
        pass.enc_out.push_back(std::move(post));
        pass.power.push_back(std::move(pl.cache));
        pass.symbols.push_back(std::move(pl.symbols));
    }
    for (Eigen::Index r = 0; r < pass.received.rows(); ++r) {
        pass.received(r, 0) += noise[r].real();
        pass.received(r, 1) += noise[r].imag();
    }
    decoder_forward(layout, params, pass.received, &pass.dec_pre, &pass.dec_act);
    pass.loss = bce_loss(pass.dec_act.back(), bits);
    return pass;
}

std::vector<double> backward(const DaeConfig& config, const ParamLayout& layout, std::span<const double> params,
                             const ForwardPass& pass)
{
    const Scenario& s = config.scenario;
    std::vector<double> grad_storage(layout.total, 0.0);
    std::span<double> grad(grad_storage);

    const RowMatrix& z = pass.dec_act.back();
    const auto count = static_cast<double>(z.size());
    // d loss / d logit = (z - b) / count where the clamp is inactive, 0 where it bites.
    RowMatrix delta = (z - pass.bits) / count;
    for (Eigen::Index r = 0; r < z.rows(); ++r)
        for (Eigen::Index j = 0; j < z.cols(); ++j)
            if (z(r, j) < kProbClamp || z(r, j) > 1.0 - kProbClamp)
                delta(r, j) = 0.0;

    RowMatrix d_received;
    for (std::size_t l = layout.dec_weight.size(); l-- > 0;) {
        const RowMatrix& input = l == 0 ? pass.received : pass.dec_act[l - 1];
        view(grad, layout.dec_weight[l]) = RowMatrix(input.transpose() * delta);
        view_vec(grad, layout.dec_bias[l]) = Eigen::RowVectorXd(delta.colwise().sum());
        RowMatrix upstream = delta * view(params, layout.dec_weight[l]).transpose();
        if (l == 0) {
            d_received = std::move(upstream);
        } else {
            delta = upstream.cwiseProduct((pass.dec_pre[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }

    const auto n = static_cast<double>(pass.bits.rows());
    for (std::size_t i = 0; i < s.users(); ++i) {
        const PowerCache& c = pass.power[i];
        const RowMatrix g = std::sqrt(s.alpha[i]) * d_received;

        // Learned scale: x_d = normalized_d / s_d, s_d = 1 + relu(raw_d).
        const Eigen::RowVector2d raw = view_vec(params, layout.scale_raw[i]);
        const Eigen::RowVector2d g_dot_norm = g.cwiseProduct(c.normalized).colwise().sum();
        auto g_raw = view_vec(grad, layout.scale_raw[i]);
        for (int d = 0; d < 2; ++d)
            g_raw[d] = raw[d] > 0.0 ? -g_dot_norm[d] / (c.scale[d] * c.scale[d]) : 0.0;

        // Power normalization, including the coupling through the batch power.
        const RowMatrix d_norm = g.array().rowwise() / c.scale.array();
        const RowMatrix centered = c.normalized * c.sigma;
        const double coupling = d_norm.cwiseProduct(centered).sum() / (n * c.sigma * c.sigma * c.sigma);
        const RowMatrix d_centered = d_norm / c.sigma - coupling * centered;

        // Centering: subtract the column mean of the incoming gradient.
        const Eigen::RowVector2d d_mean = d_centered.colwise().sum() / n;
        RowMatrix d_pre = d_centered.rowwise() - d_mean;
        d_pre = d_pre.cwiseProduct((pass.enc_pre[i].array() > 0.0).cast<double>().matrix());

        const auto cols = pass.bits.middleCols(user_column(s, i), s.bits[i]);
        view(grad, layout.enc_weight[i]) = RowMatrix(cols.transpose() * d_pre);
        view_vec(grad, layout.enc_bias[i]) = Eigen::RowVectorXd(d_pre.colwise().sum());
    }
    return grad_storage;
}

std::vector<double> init_params(const DaeConfig& config, const ParamLayout& layout)
{
    std::vector<double> params(layout.total, 0.0);
    std::uint64_t draw = 0;
    auto uniform = [&]() {
        const auto words = config.init_seed.block(draw / 2);
        const std::uint64_t w = words[draw % 2];
        ++draw;
        return static_cast<double>(w >> 11) * 0x1.0p-53;
    };
    auto glorot = [&](const ParamLayout::Block& b) {
        const double limit = std::sqrt(6.0 / (b.rows + b.cols));
        for (std::size_t j = 0; j < b.size(); ++j)
            params[b.offset + j] = limit * (2.0 * uniform() - 1.0);
    };
    for (std::size_t i = 0; i < layout.enc_weight.size(); ++i) {
        glorot(layout.enc_weight[i]);
        for (std::size_t j = 0; j < 2; ++j)
            params[layout.scale_raw[i].offset + j] = -1.0;
    }
    for (const auto& b : layout.dec_weight)
        glorot(b);
    return params;
}

DaeModel::DaeModel(DaeConfig config, std::vector<double> params)
    : config_(std::move(config)), layout_(config_.scenario, config_.hidden_sizes), params_(std::move(params))
{
    validate_config(config_);
    if (params_.size() != layout_.total)
        throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(layout_.total) + " parameters, got " +
                                                  std::to_string(params_.size()));
    for (double p : params_)
        if (!std::isfinite(p))
            throw Error(ErrorCode::CollapsedEncoder, "model parameters are not finite");
}

void DaeModel::finalize()
{
    ExtractionStats stats;
    const Scenario& s = config_.scenario;
    for (std::size_t i = 0; i < s.users(); ++i) {
        const std::span<const double> params(params_);
        const RowMatrix h = encoder_forward(view(params, layout_.enc_weight[i]), view_vec(params, layout_.enc_bias[i]),
                                            user_patterns(s.bits[i]));
        const auto n = static_cast<double>(h.rows());
        const Eigen::RowVector2d mean = h.colwise().sum() / n;
        const double power = (h.rowwise() - mean).squaredNorm() / n;
        if (power < kCollapsePower)
            throw Error(ErrorCode::CollapsedEncoder, "encoder of user " + std::to_string(i + 1) +
                                                         " maps every bit pattern to the same symbol");
        stats.mean.push_back(mean);
        stats.power.push_back(power);
    }
    stats_ = std::move(stats);
}

void DaeModel::set_stats(ExtractionStats stats)
{
    if (stats.mean.size() != config_.scenario.users() || stats.power.size() != config_.scenario.users())
        throw Error(ErrorCode::ShapeMismatch, "extraction statistics do not match the user count");
    stats_ = std::move(stats);
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience)
{
    if (patience < 1)
        throw Error(ErrorCode::InvalidArgument, "patience must be at least 1");
}

bool EarlyStopping::observe(int epoch, double loss)
{
    if (loss < best_loss_) {
        best_loss_ = loss;
        best_epoch_ = epoch;
        return true;
    }
    return false;
}

DaeModel train(const DaeConfig& config, const TrainObserver& observer)
{
    validate_config(config);
    const ParamLayout layout(config.scenario, config.hidden_sizes);
    const RowMatrix bits = build_batch(config.scenario, config.num_const);
    const auto rows = static_cast<std::size_t>(bits.rows());
    const NoiseSpec noise_spec = NoiseSpec::from_snr_db(config.train_snr_db);

    std::vector<double> params = init_params(config, layout);
    std::vector<double> best = params;
    AdamState adam;
    AdamState best_adam;
    EarlyStopping stopper(config.patience);
    TrainingHistory history;
    history.stop_reason = "max_epochs";

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto noise =
            sample_noise(noise_spec, rows, config.noise_seed, static_cast<std::uint64_t>(epoch - 1) * rows);
        const ForwardPass pass = forward(config, layout, params, bits, noise);
        history.loss.push_back(pass.loss);
        if (!std::isfinite(pass.loss)) {
            history.stop_reason = "non_finite_loss";
            break;
        }
        if (stopper.observe(epoch, pass.loss)) {
            best = params;
            best_adam = adam;
        }
        if (observer)
            observer(epoch, pass.loss, stopper.best_epoch());
        if (stopper.should_stop(epoch)) {
            history.stop_reason = "patience";
            break;
        }
        const std::vector<double> grad = backward(config, layout, params, pass);
        adam_step(params, grad, adam, config.adam, epoch);
    }
    history.best_epoch = stopper.best_epoch();

    DaeModel model(config, std::move(best));
    model.set_history(std::move(history));
    model.set_adam_state(std::move(best_adam));
    model.finalize();
    return model;
}

double validation_loss(const DaeModel& model, double snr_db, int num_const)
{
    const DaeConfig& config = model.config();
    const RowMatrix bits = build_batch(config.scenario, num_const);
    const auto noise = sample_noise(NoiseSpec::from_snr_db(snr_db), static_cast<std::size_t>(bits.rows()),
                                    config.noise_seed.substream(0x7A11D));
    return forward(config, model.layout(), model.params(), bits, noise).loss;
}

DaeModel train_restarts(const DaeConfig& base, int restarts, std::span<const double> snr_list, double select_snr_db,
                        RestartSummary* summary, const TrainObserver& observer)
{
    if (restarts < 1 || snr_list.empty())
        throw Error(ErrorCode::InvalidArgument, "restart protocol needs at least one restart and one SNR");
    RestartSummary local;
    std::optional<DaeModel> best;
    // Ranking key: duplicate-free first, then validation loss.
    std::pair<bool, double> best_key{true, std::numeric_limits<double>::infinity()};
    std::string failures;
    for (int r = 0; r < restarts; ++r) {
        DaeConfig config = base;
        config.init_seed.stream_id = base.init_seed.stream_id + static_cast<std::uint64_t>(r);
        config.train_snr_db = snr_list[static_cast<std::size_t>(r) % snr_list.size()];
        RestartResult result{config.init_seed.stream_id, config.train_snr_db, 0.0, 0, false, false};
        try {
            DaeModel model = train(config, observer);
            result.epochs = static_cast<int>(model.history().loss.size());
            result.validation_loss = validation_loss(model, select_snr_db, base.num_const);
            const auto users = extract_constellations(model);
            result.duplicate_points = min_distance(superimpose(config.scenario, users).points) < kStructuralTol;
            const std::pair<bool, double> key{result.duplicate_points, result.validation_loss};
            if (!best || key < best_key) {
                best_key = key;
                best = std::move(model);
                local.best = local.runs.size();
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::CollapsedEncoder)
                throw;
            result.collapsed = true;
            result.validation_loss = std::numeric_limits<double>::infinity();
            failures += " seed " + std::to_string(config.init_seed.seed) + "/" +
                        std::to_string(config.init_seed.stream_id) + ";";
        }
        local.runs.push_back(result);
    }
    if (!best)
        throw Error(ErrorCode::CollapsedEncoder, "every restart collapsed:" + failures);
    if (summary)
        *summary = std::move(local);
    return std::move(*best);
}

std::vector<Constellation> extract_constellations(const DaeModel& model)
{
    if (!model.finalized())
        throw Error(ErrorCode::InvalidArgument, "model has no extraction statistics");
    const Scenario& s = model.config().scenario;
    const ParamLayout& layout = model.layout();
    const auto params = model.params();
    const ExtractionStats& stats = *model.stats();
    std::vector<Constellation> out;
    for (std::size_t i = 0; i < s.users(); ++i) {
        if (stats.power[i] < kCollapsePower)
            throw Error(ErrorCode::CollapsedEncoder, "encoder of user " + std::to_string(i + 1) + " is collapsed");
        const RowMatrix h =
            encoder_forward(view(params, layout.enc_weight[i]), view_vec(params, layout.enc_bias[i]),
                            user_patterns(s.bits[i]));
        const double sigma = std::sqrt(stats.power[i] + model.config().eps_norm);
        const Eigen::RowVector2d scale = scale_factors(view_vec(params, layout.scale_raw[i]));
        std::vector<ComplexPoint> pts(static_cast<std::size_t>(h.rows()));
        for (Eigen::Index r = 0; r < h.rows(); ++r)
            pts[r] = {(h(r, 0) - stats.mean[i][0]) / sigma / scale[0], (h(r, 1) - stats.mean[i][1]) / sigma / scale[1]};
        out.emplace_back(s.bits[i], std::move(pts), PowerRegime::SubUnit);
    }
    return out;
}

RowMatrix decode_batch(const DaeModel& model, std::span<const ComplexPoint> ys)
{
    RowMatrix x(static_cast<Eigen::Index>(ys.size()), 2);
    for (std::size_t t = 0; t < ys.size(); ++t) {
        x(t, 0) = ys[t].real();
        x(t, 1) = ys[t].imag();
    }
    return decoder_forward(model.layout(), model.params(), std::move(x), nullptr, nullptr);
}

std::vector<double> decode(const DaeModel& model, ComplexPoint y)
{
    const RowMatrix z = decode_batch(model, std::span<const ComplexPoint>(&y, 1));
    return std::vector<double>(z.data(), z.data() + z.size());
}

}  // namespace maclab
