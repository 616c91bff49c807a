#include "maclab/commands.hpp"

#include "maclab/error.hpp"
#include "maclab/metrics.hpp"
#include "maclab/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <ostream>

namespace maclab {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string join(const std::vector<int>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

std::string join(const std::vector<double>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? "," : "") + format_double(v[i]);
    return out;
}

Constellation rotation_base(int k)
{
    if (k == 2)
        return qpsk();
    if (k == 1)
        return bpsk();
    throw Error(ErrorCode::UnsupportedOrder, "rotated-QPSK baselines need k in {1, 2} per user (QPSK or BPSK); "
                                             "use 'pam' or 'train' for higher orders");
}

std::string scenario_text(const Scenario& s) { return "k=" + join(s.bits) + " alpha=" + join(s.alpha); }

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Curve rows at a given SNR draw from a stream tied to the SNR value, so a
/// point does not depend on the rest of the grid.
RngSeed row_seed(std::uint64_t seed, double snr_db)
{
    return RngSeed{seed, fnv1a64(format_double(snr_db))};
}

}  // namespace

int exit_code_for(const Error& e) { return is_numerical_failure(e.code()) ? kExitNumerical : kExitValidation; }

std::uint64_t default_seed()
{
    if (const char* env = std::getenv("MACLAB_SEED")) {
        std::uint64_t v = 0;
        const std::string_view text(env);
        const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
        if (r.ec != std::errc() || r.ptr != text.data() + text.size())
            throw Error(ErrorCode::InvalidArgument, "MACLAB_SEED must be an unsigned integer");
        return v;
    }
    return 1;
}

ConstellationFile run_baseline(const BaselineCommand& cmd, std::ostream& log)
{
    Scenario s{cmd.bits, cmd.alpha};
    validate_scenario(s);
    if (s.users() != 2)
        throw Error(ErrorCode::InvalidArgument, "baselines are defined for two users; use 'train' for K != 2");

    ConstellationFile file;
    file.scenario = s;
    if (cmd.method == "pam") {
        file.users = pam_orthogonal(s.bits[0], s.bits[1]);
        file.provenance.method = "pam";
        const double md = min_distance(superimpose(s, file.users).points);
        file.provenance.add("min_distance", md);
        log << "pam: " << scenario_text(s) << " sum min distance " << format_double(md) << "\n";
    } else if (cmd.method == "qpsk-rot-rate" || cmd.method == "qpsk-rot-md") {
        const bool rate = cmd.method == "qpsk-rot-rate";
        if (rate && !cmd.snr_db)
            throw Error(ErrorCode::MissingSnrForRateObjective, "qpsk-rot-rate needs --snr <dB>");
        const auto result = rotation_optimize(rotation_base(s.bits[0]), rotation_base(s.bits[1]), s,
                                              rate ? RotationObjective::SumRate : RotationObjective::MinDistance,
                                              cmd.grid_deg * kDeg, rate ? cmd.snr_db : std::nullopt);
        file.users = result.users;
        file.provenance.method = rate ? "qpsk_rot_rate" : "qpsk_rot_md";
        file.provenance.add("objective", std::string(to_string(result.objective)));
        file.provenance.add("grid_deg", cmd.grid_deg);
        if (rate) {
            file.provenance.add("snr_db", *cmd.snr_db);
            file.provenance.add("sweep_quad_order", std::to_string(kSweepQuadOrder));
            file.provenance.add("final_quad_order", std::to_string(kFinalQuadOrder));
        }
        file.provenance.add("theta_star_deg", result.theta_star / kDeg);
        file.provenance.add("objective_value", result.objective_value);
        const double md = min_distance(superimpose(s, file.users).points);
        file.provenance.add("min_distance", md);
        log << cmd.method << ": " << scenario_text(s) << " theta* " << format_double(result.theta_star / kDeg)
            << " deg, objective " << format_double(result.objective_value) << ", sum min distance "
            << format_double(md) << "\n";
    } else if (cmd.method == "parallelogram") {
        const auto result = parallelogram_md(s, cmd.budget);
        file.users = result.users;
        file.provenance.method = "parallelogram";
        file.provenance.add("coarse_angle_deg", cmd.budget.coarse_angle_deg);
        file.provenance.add("coarse_ratio_step", cmd.budget.coarse_ratio_step);
        file.provenance.add("segment_angle_deg", cmd.budget.segment_angle_deg);
        file.provenance.add("segment_ratio_step", cmd.budget.segment_ratio_step);
        file.provenance.add("refine_starts", std::to_string(cmd.budget.refine_starts));
        file.provenance.add("final_angle_deg", cmd.budget.final_angle_deg);
        file.provenance.add("min_ratio", cmd.budget.min_ratio);
        file.provenance.add("evaluations", std::to_string(result.evaluations));
        file.provenance.add("min_distance", result.min_distance);
        log << "parallelogram: " << scenario_text(s) << " sum min distance " << format_double(result.min_distance)
            << " after " << result.evaluations << " evaluations\n";
    } else {
        throw Error(ErrorCode::InvalidArgument,
                    "unknown baseline method '" + cmd.method + "' (pam, qpsk-rot-rate, qpsk-rot-md, parallelogram)");
    }
    if (!cmd.output.empty())
        write_text_file(cmd.output, write_constellation(file));
    return file;
}

TrainOutcome run_train(const TrainCommand& cmd, std::ostream& log)
{
    DaeConfig config;
    config.scenario = Scenario{cmd.bits, cmd.alpha};
    config.train_snr_db = cmd.train_snr_db;
    config.num_const = cmd.num_const;
    config.max_epochs = cmd.max_epochs;
    config.patience = cmd.patience;
    config.hidden_sizes = cmd.hidden_sizes;
    config.adam.step_size = cmd.step_size;
    config.init_seed = RngSeed{cmd.seed, 0};
    config.noise_seed = RngSeed{cmd.seed, std::uint64_t{1} << 32};
    validate_config(config);

    TrainObserver observer;
    if (cmd.progress_every > 0)
        observer = [&log, every = cmd.progress_every](int epoch, double loss, int best) {
            if (epoch % every == 0)
                log << "  epoch " << epoch << " loss " << format_double(loss) << " best epoch " << best << "\n";
        };

    Provenance prov;
    prov.method = "dae";
    prov.add("seed", std::to_string(cmd.seed));
    prov.add("init_stream", std::to_string(config.init_seed.stream_id));
    prov.add("noise_stream", std::to_string(config.noise_seed.stream_id));

    const bool protocol = cmd.restarts > 0 || !cmd.snr_list.empty();
    std::optional<DaeModel> model;
    try {
        if (protocol) {
            const std::vector<double> snrs = cmd.snr_list.empty() ? std::vector<double>{cmd.train_snr_db} : cmd.snr_list;
            const int restarts = cmd.restarts > 0 ? cmd.restarts : static_cast<int>(snrs.size());
            const double select = cmd.select_snr_db.value_or(median(snrs));
            RestartSummary summary;
            model.emplace(train_restarts(config, restarts, snrs, select, &summary, observer));
            prov.add("restarts", std::to_string(restarts));
            prov.add("snr_list", join(snrs));
            prov.add("select_snr_db", select);
            for (std::size_t r = 0; r < summary.runs.size(); ++r) {
                const auto& run = summary.runs[r];
                log << "restart " << r << ": init stream " << run.init_stream << " train SNR "
                    << format_double(run.train_snr_db) << " dB, epochs " << run.epochs << ", validation loss "
                    << (run.collapsed ? std::string("collapsed") : format_double(run.validation_loss))
                    << (run.duplicate_points ? ", coincident sum points" : "") << "\n";
                prov.add("restart." + std::to_string(r),
                         "stream=" + std::to_string(run.init_stream) + " snr=" + format_double(run.train_snr_db) +
                             " epochs=" + std::to_string(run.epochs) + " validation_loss=" +
                             (run.collapsed ? std::string("collapsed") : format_double(run.validation_loss)) +
                             (run.duplicate_points ? " duplicate_points=1" : ""));
            }
            prov.add("selected_restart", std::to_string(summary.best));
        } else {
            model.emplace(train(config, observer));
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CollapsedEncoder)
            throw Error(ErrorCode::CollapsedEncoder,
                        std::string(e.what()) + " (seed " + std::to_string(cmd.seed) + ")");
        throw;
    }

    const TrainingHistory& h = model->history();
    prov.add("train_snr_db", model->config().train_snr_db);
    prov.add("epochs", std::to_string(h.loss.size()));
    prov.add("best_epoch", std::to_string(h.best_epoch));
    prov.add("best_loss", h.loss.at(static_cast<std::size_t>(h.best_epoch - 1)));
    prov.add("stop_reason", h.stop_reason);

    ConstellationFile file;
    file.scenario = model->config().scenario;
    file.users = extract_constellations(*model);
    file.provenance = prov;
    const double md = min_distance(superimpose(file.scenario, file.users).points);
    file.provenance.add("min_distance", md);
    log << "dae: " << scenario_text(file.scenario) << " trained " << h.loss.size() << " epochs (best "
        << h.best_epoch << ", loss " << format_double(h.loss[h.best_epoch - 1]) << ", " << h.stop_reason
        << "), sum min distance " << format_double(md) << "\n";

    if (!cmd.model_output.empty())
        write_text_file(cmd.model_output, write_model(*model, prov));
    std::filesystem::path const_out = cmd.constellation_output;
    if (const_out.empty() && !cmd.model_output.empty())
        const_out = std::filesystem::path(cmd.model_output).replace_extension(".const");
    if (!const_out.empty())
        write_text_file(const_out, write_constellation(file));
    return TrainOutcome{std::move(*model), std::move(file), std::move(prov)};
}

LoadedInput load_input(const std::filesystem::path& path)
{
    const std::string text = read_text_file(path);
    LoadedInput in;
    in.tag = path.stem().string();
    if (text.find("schema = " + std::string(kModelSchema)) != std::string::npos) {
        Provenance prov;
        in.model.emplace(read_model(text, &prov));
        in.constellation.scenario = in.model->config().scenario;
        in.constellation.users = extract_constellations(*in.model);
        in.constellation.provenance = prov;
    } else {
        in.constellation = read_constellation(text);
    }
    return in;
}

CurveFile run_eval(const EvalCommand& cmd)
{
    if (cmd.metric != "mi" && cmd.metric != "ser" && cmd.metric != "mindist")
        throw Error(ErrorCode::InvalidArgument, "metric must be mi, ser or mindist");
    if (cmd.inputs.empty())
        throw Error(ErrorCode::InvalidArgument, "eval needs at least one input file");
    const std::vector<double> grid = parse_snr_grid(cmd.snr_grid);
    if (cmd.metric == "ser" && (!cmd.trials || !cmd.seed))
        throw Error(ErrorCode::InvalidArgument, "SER evaluation needs --trials and --seed");
    if (cmd.metric == "ser" && *cmd.trials < 1)
        throw Error(ErrorCode::InvalidArgument, "--trials must be positive");
    if (cmd.metric == "mi" && cmd.monte_carlo && cmd.samples < 1)
        throw Error(ErrorCode::InvalidArgument, "--samples must be positive");

    std::vector<LoadedInput> inputs;
    for (const auto& p : cmd.inputs)
        inputs.push_back(load_input(p));
    const Scenario& s = inputs.front().constellation.scenario;
    for (const auto& in : inputs)
        if (!(in.constellation.scenario == s))
            throw Error(ErrorCode::ModelScenarioMismatch,
                        "input '" + in.tag + "' has scenario " + scenario_text(in.constellation.scenario) +
                            ", expected " + scenario_text(s));

    CurveFile curve;
    curve.metadata.emplace_back("metric", cmd.metric);
    curve.metadata.emplace_back("k", join(s.bits));
    curve.metadata.emplace_back("alpha", join(s.alpha));
    std::string methods, tags;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        methods += (i ? "," : "") + inputs[i].constellation.provenance.method;
        tags += (i ? "," : "") + inputs[i].tag;
    }
    curve.metadata.emplace_back("method", methods);
    curve.metadata.emplace_back("inputs", tags);
    if (cmd.metric == "mi") {
        if (cmd.monte_carlo) {
            curve.metadata.emplace_back("evaluator", "montecarlo");
            curve.metadata.emplace_back("samples_per_point", std::to_string(cmd.samples));
            curve.metadata.emplace_back("seed", std::to_string(cmd.seed.value_or(default_seed())));
        } else {
            curve.metadata.emplace_back("evaluator", "quadrature");
            curve.metadata.emplace_back("quad_order", std::to_string(cmd.quad_order));
        }
    } else if (cmd.metric == "ser") {
        curve.metadata.emplace_back("evaluator", "montecarlo");
        curve.metadata.emplace_back("trials", std::to_string(*cmd.trials));
        curve.metadata.emplace_back("seed", std::to_string(*cmd.seed));
        std::string detectors;
        for (std::size_t i = 0; i < inputs.size(); ++i)
            detectors += (i ? "," : "") + std::string(inputs[i].model ? "dae" : "ml");
        curve.metadata.emplace_back("detector", detectors);
    }
    curve.metadata.emplace_back("snr_definition", "P_av/N0 with P_av=1");
    curve.metadata.emplace_back("tool_version", std::string(kToolVersion));

    std::vector<std::string> metric_columns;
    if (cmd.metric == "mi") {
        metric_columns = {"mi_bits", "std_error"};
    } else if (cmd.metric == "mindist") {
        metric_columns = {"min_distance"};
    } else {
        metric_columns = {"joint_ser", "avg_ser"};
        for (std::size_t i = 0; i < s.users(); ++i)
            metric_columns.push_back("ser_u" + std::to_string(i + 1));
        for (std::size_t i = 0; i < s.users(); ++i)
            metric_columns.push_back("ber_u" + std::to_string(i + 1));
    }
    curve.columns.push_back("snr_db");
    for (const auto& in : inputs)
        for (const auto& c : metric_columns)
            curve.columns.push_back(inputs.size() > 1 ? in.tag + "." + c : c);

    const EvalOptions opts{std::max(1u, cmd.workers)};
    const double max_bits = s.total_bits();
    for (double snr : grid) {
        std::vector<double> row{snr};
        const NoiseSpec spec = NoiseSpec::from_snr_db(snr);
        for (const auto& in : inputs) {
            const ConstellationFile& c = in.constellation;
            if (cmd.metric == "mi") {
                const SumConstellation sum = superimpose(c.scenario, c.users);
                const RatePoint r =
                    cmd.monte_carlo
                        ? cc_sum_rate_mc(sum, spec, cmd.samples, row_seed(cmd.seed.value_or(default_seed()), snr), opts)
                        : cc_sum_rate_gh(sum, spec, cmd.quad_order, opts);
                if (!cmd.monte_carlo && (r.rate_bits < -1e-9 || r.rate_bits > max_bits + 1e-6))
                    throw Error(ErrorCode::DegenerateConstellation,
                                "quadrature MI " + format_double(r.rate_bits) + " outside [0, sum k]");
                row.push_back(r.rate_bits);
                row.push_back(r.std_error);
            } else if (cmd.metric == "mindist") {
                row.push_back(min_distance(superimpose(c.scenario, c.users).points));
            } else {
                const RngSeed seed = row_seed(*cmd.seed, snr);
                const SerReport rep = in.model ? ser_dae(*in.model, c.scenario, spec, *cmd.trials, seed, opts)
                                               : ser_ml(c.scenario, c.users, spec, *cmd.trials, seed, opts);
                row.push_back(rep.joint_ser);
                row.push_back(rep.avg_ser);
                row.insert(row.end(), rep.per_user_ser.begin(), rep.per_user_ser.end());
                row.insert(row.end(), rep.per_user_ber.begin(), rep.per_user_ber.end());
            }
        }
        curve.rows.push_back(std::move(row));
    }
    if (!cmd.output.empty())
        write_text_file(cmd.output, write_curve(curve));
    return curve;
}

std::string run_plot(const PlotCommand& cmd)
{
    if (cmd.inputs.empty())
        throw Error(ErrorCode::InvalidArgument, "plot needs at least one input");
    std::string svg;
    if (cmd.kind == "constellation") {
        if (cmd.inputs.size() != 1)
            throw Error(ErrorCode::InvalidArgument, "constellation plots take exactly one input");
        const LoadedInput in = load_input(cmd.inputs.front());
        const std::string title = cmd.title.empty() ? in.constellation.provenance.method + " constellation, " +
                                                          scenario_text(in.constellation.scenario)
                                                    : cmd.title;
        svg = plot_constellations_svg(in.constellation, title);
    } else if (cmd.kind == "curve") {
        std::vector<CurveSeries> series;
        std::string metric;
        for (const auto& path : cmd.inputs) {
            const CurveFile curve = read_curve(read_text_file(path));
            if (const std::string* m = curve.meta("metric"))
                metric = *m;
            const std::string* method = curve.meta("method");
            const std::string stem = path.stem().string();
            for (std::size_t c = 1; c < curve.columns.size(); ++c) {
                const std::string& name = curve.columns[c];
                const bool wanted = cmd.column.empty()
                                        ? (name.ends_with("mi_bits") || name.ends_with("joint_ser") ||
                                           name.ends_with("min_distance"))
                                        : (name == cmd.column || name.ends_with("." + cmd.column));
                if (!wanted)
                    continue;
                CurveSeries sr;
                const bool prefixed = name.find('.') != std::string::npos;
                sr.label = prefixed ? name.substr(0, name.find('.')) : (method ? *method : stem);
                if (!prefixed && cmd.inputs.size() > 1 && method && *method == "dae")
                    sr.label = *method;
                for (const auto& row : curve.rows) {
                    sr.x.push_back(row[0]);
                    sr.y.push_back(row[c]);
                }
                series.push_back(std::move(sr));
            }
        }
        if (series.empty())
            throw Error(ErrorCode::InvalidArgument, "no matching curve columns to plot");
        const bool log_y = cmd.log_y.value_or(metric == "ser");
        const std::string y_label = metric == "mi"    ? "CC sum rate (bits/channel use)"
                                    : metric == "ser" ? "Symbol error rate"
                                                      : (cmd.column.empty() ? "value" : cmd.column);
        svg = plot_curves_svg(series, "SNR (dB)", y_label, log_y, cmd.title);
    } else {
        throw Error(ErrorCode::InvalidArgument, "plot kind must be constellation or curve");
    }
    if (!cmd.output.empty())
        write_text_file(cmd.output, svg);
    return svg;
}

}  // namespace maclab
