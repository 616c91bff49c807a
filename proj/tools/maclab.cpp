// maclab: constellation design and evaluation for the two-user (and K-user) MAC.

#include "maclab/commands.hpp"
#include "maclab/error.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <thread>

using namespace maclab;

namespace {

void add_scenario(CLI::App* cmd, std::vector<int>& bits, std::vector<double>& alpha)
{
    cmd->add_option("--k", bits, "bits per user, comma separated")->delimiter(',');
    cmd->add_option("--alpha", alpha, "per-user power ratios, comma separated (sum = K)")->delimiter(',');
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"maclab: constellation design for the Gaussian multiple access channel"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    BaselineCommand base;
    auto* c_base = app.add_subcommand("baseline", "build a reference constellation pair");
    c_base->add_option("method", base.method, "pam | qpsk-rot-rate | qpsk-rot-md | parallelogram")->required();
    add_scenario(c_base, base.bits, base.alpha);
    c_base->add_option("--grid-deg", base.grid_deg, "rotation grid step in degrees")->capture_default_str();
    c_base->add_option("--snr", base.snr_db, "SNR in dB for the rate objective");
    c_base->add_option("--refine-starts", base.budget.refine_starts, "parallelogram: cells polished by pattern search")
        ->capture_default_str();
    c_base->add_option("-o,--output", base.output, "constellation file to write");

    TrainCommand train;
    train.seed = 0;
    bool seed_given = false;
    auto* c_train = app.add_subcommand("train", "train the autoencoder and extract its constellations");
    add_scenario(c_train, train.bits, train.alpha);
    c_train->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { train.seed = v, seed_given = true; },
                                                "master seed (default: MACLAB_SEED or 1)");
    c_train->add_option("--train-snr", train.train_snr_db, "training SNR in dB")->capture_default_str();
    c_train->add_option("--num-const", train.num_const, "rows per training batch")->capture_default_str();
    c_train->add_option("--max-epochs", train.max_epochs)->capture_default_str();
    c_train->add_option("--patience", train.patience)->capture_default_str();
    c_train->add_option("--restarts", train.restarts, "independent restarts (best by validation loss)");
    c_train->add_option("--snr-list", train.snr_list, "training SNRs cycled over restarts")->delimiter(',');
    c_train->add_option("--select-snr", train.select_snr_db, "validation SNR (default: median of the list)");
    c_train->add_option("--hidden", train.hidden_sizes, "decoder hidden layer widths")->delimiter(',');
    c_train->add_option("--lr", train.step_size, "Adam step size")->capture_default_str();
    c_train->add_option("-o,--output", train.model_output, "model file to write (constellation goes next to it)");
    c_train->add_option("--const-out", train.constellation_output, "constellation file to write");
    c_train->add_option("--progress", train.progress_every, "print the loss every N epochs");

    EvalCommand eval;
    eval.workers = 1;
    auto* c_eval = app.add_subcommand("eval", "evaluate constellation or model files over an SNR grid");
    c_eval->add_option("metric", eval.metric, "mi | ser | mindist")->required();
    c_eval->add_option("inputs", eval.inputs, "constellation (.const) or model (.dae) files")->required();
    c_eval->add_option("--snr", eval.snr_grid, "start:step:stop, a comma list, or one value")->required();
    c_eval->add_flag("--mc", eval.monte_carlo, "Monte Carlo MI instead of quadrature");
    c_eval->add_option("--samples", eval.samples, "Monte Carlo samples per sum point")->capture_default_str();
    c_eval->add_option("--seed", eval.seed);
    c_eval->add_option("--trials", eval.trials, "SER trials per SNR");
    c_eval->add_option("--quad-order", eval.quad_order)->capture_default_str();
    c_eval->add_option("--workers", eval.workers, "threads (0: all cores); results do not depend on it");
    c_eval->add_option("-o,--output", eval.output, "curve file to write (default: standard output)");

    PlotCommand plot;
    bool linear = false, logarithmic = false;
    auto* c_plot = app.add_subcommand("plot", "render constellation or curve files as SVG");
    c_plot->add_option("kind", plot.kind, "constellation | curve")->required();
    c_plot->add_option("inputs", plot.inputs)->required();
    c_plot->add_option("-o,--output", plot.output)->required();
    c_plot->add_option("--column", plot.column, "curve column to draw");
    c_plot->add_flag("--log-y", logarithmic);
    c_plot->add_flag("--linear-y", linear)->excludes("--log-y");
    c_plot->add_option("--title", plot.title);

    std::filesystem::path manifest, out_dir{"sweep-out"};
    auto* c_sweep = app.add_subcommand("sweep", "run every unit of a JSON manifest");
    c_sweep->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);
    c_sweep->add_option("-o,--out", out_dir, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (*c_base) {
            run_baseline(base, std::cout);
        } else if (*c_train) {
            if (!seed_given)
                train.seed = default_seed();
            run_train(train, std::cout);
        } else if (*c_eval) {
            if (eval.workers == 0)
                eval.workers = std::max(1u, std::thread::hardware_concurrency());
            if (!eval.seed && eval.metric == "ser" && std::getenv("MACLAB_SEED"))
                eval.seed = default_seed();
            const CurveFile curve = run_eval(eval);
            if (eval.output.empty())
                std::cout << write_curve(curve);
        } else if (*c_plot) {
            if (logarithmic)
                plot.log_y = true;
            if (linear)
                plot.log_y = false;
            run_plot(plot);
        } else if (*c_sweep) {
            return run_sweep(manifest, out_dir, std::cout).exit_code;
        }
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
