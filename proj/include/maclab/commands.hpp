#pragma once

#include "maclab/baselines.hpp"
#include "maclab/dae.hpp"
#include "maclab/error.hpp"
#include "maclab/io.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace maclab {

/// Process exit codes shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitNumerical = 3 };

/// kExitNumerical for numerical failures, kExitValidation otherwise.
int exit_code_for(const Error& e);

/// Default seed, overridable through MACLAB_SEED.
std::uint64_t default_seed();

struct BaselineCommand {
    std::string method;  ///< pam | qpsk-rot-rate | qpsk-rot-md | parallelogram
    std::vector<int> bits{2, 2};
    std::vector<double> alpha{1.0, 1.0};
    double grid_deg = 0.1;
    std::optional<double> snr_db;  ///< required by qpsk-rot-rate
    SearchBudget budget;
    std::filesystem::path output;
};

ConstellationFile run_baseline(const BaselineCommand& cmd, std::ostream& log);

struct TrainCommand {
    std::vector<int> bits{2, 2};
    std::vector<double> alpha{1.0, 1.0};
    std::uint64_t seed = 1;
    double train_snr_db = 13.0;
    int num_const = 2048;
    int max_epochs = 32768;
    int patience = 4000;
    int restarts = 0;  ///< 0: single run at train_snr_db
    std::vector<double> snr_list;
    std::optional<double> select_snr_db;
    std::vector<int> hidden_sizes{128, 64, 32};
    double step_size = 1e-3;
    std::filesystem::path model_output;
    std::filesystem::path constellation_output;
    int progress_every = 0;
};

struct TrainOutcome {
    DaeModel model;
    ConstellationFile constellation;
    Provenance provenance;
};

TrainOutcome run_train(const TrainCommand& cmd, std::ostream& log);

struct EvalCommand {
    std::string metric;  ///< mi | ser | mindist
    std::vector<std::filesystem::path> inputs;
    std::string snr_grid;
    bool monte_carlo = false;
    std::uint64_t samples = 10000;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials;
    int quad_order = 16;
    unsigned workers = 1;
    std::filesystem::path output;
};

CurveFile run_eval(const EvalCommand& cmd);

struct PlotCommand {
    std::string kind;  ///< constellation | curve
    std::vector<std::filesystem::path> inputs;
    std::filesystem::path output;
    std::string column;  ///< curve plots: column to draw (default: first metric column)
    std::optional<bool> log_y;
    std::string title;
};

std::string run_plot(const PlotCommand& cmd);

struct SweepOutcome {
    std::size_t completed = 0;
    std::size_t skipped = 0;
    std::size_t failed = 0;
    int exit_code = kExitOk;
};

/// Runs every (entry, method) unit of a JSON manifest into out_dir and keeps
/// out_dir/index.json up to date. Units whose content hash is unchanged and
/// whose outputs exist are skipped.
SweepOutcome run_sweep(const std::filesystem::path& manifest, const std::filesystem::path& out_dir, std::ostream& log);

/// A constellation or model file, with the model's extracted constellations.
struct LoadedInput {
    std::string tag;
    ConstellationFile constellation;
    std::optional<DaeModel> model;
};

LoadedInput load_input(const std::filesystem::path& path);

}  // namespace maclab
