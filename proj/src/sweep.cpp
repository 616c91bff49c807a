#include "maclab/commands.hpp"

#include "maclab/error.hpp"
#include "maclab/plot.hpp"

#include <json.hpp>

#include <ostream>
#include <sstream>

namespace maclab {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::string_view kIndexSchema = "maclab.sweep-index/1";
constexpr std::string_view kManifestSchema = "maclab.manifest/1";

const std::vector<std::string> kKnownMethods{"pam", "qpsk-rot-rate", "qpsk-rot-md", "parallelogram", "dae"};

struct Unit {
    std::string entry;
    std::string method;
    json settings;  ///< everything that determines the unit's outputs
    std::string hash;
};

template <typename T>
T get_or(const json& j, const char* key, T fallback)
{
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::string hex(std::uint64_t v)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4)
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return out;
}

json parse_json(const std::string& text, const fs::path& path)
{
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

std::vector<Unit> expand(const json& manifest)
{
    if (!manifest.is_object())
        throw Error(ErrorCode::ParseError, "manifest must be a JSON object");
    if (manifest.contains("schema") && manifest.at("schema") != kManifestSchema)
        throw Error(ErrorCode::ParseError, "unsupported manifest schema " + manifest.at("schema").dump());
    const json defaults = manifest.value("defaults", json::object());
    std::vector<Unit> units;
    std::vector<std::string> names;
    for (const json& raw : manifest.value("entries", json::array())) {
        json entry = defaults;
        entry.update(raw);
        if (!entry.contains("name") || !entry.contains("k") || !entry.contains("alpha"))
            throw Error(ErrorCode::ParseError, "manifest entries need name, k and alpha: " + raw.dump());
        const std::string name = entry.at("name").get<std::string>();
        if (name.empty() || name.find_first_of("/\\") != std::string::npos || name == "." || name == "..")
            throw Error(ErrorCode::ParseError, "invalid entry name '" + name + "'");
        if (std::find(names.begin(), names.end(), name) != names.end())
            throw Error(ErrorCode::ParseError, "duplicate entry name '" + name + "'");
        names.push_back(name);
        for (const json& m : entry.value("methods", json::array())) {
            const std::string method = m.get<std::string>();
            if (std::find(kKnownMethods.begin(), kKnownMethods.end(), method) == kKnownMethods.end())
                throw Error(ErrorCode::ParseError, "entry '" + name + "': unknown method '" + method + "'");
            Unit u{name, method, entry, {}};
            u.settings.erase("methods");
            u.settings["method"] = method;
            u.settings["tool_version"] = std::string(kToolVersion);
            if (!u.settings.contains("seed"))
                u.settings["seed"] = default_seed();
            u.hash = hex(fnv1a64(u.settings.dump()));
            units.push_back(std::move(u));
        }
    }
    return units;
}

std::vector<std::string> run_unit(const Unit& u, const fs::path& dir, std::ostream& log)
{
    const json& s = u.settings;
    const std::uint64_t seed = s.at("seed").get<std::uint64_t>();
    const fs::path stem = dir / u.method;
    std::vector<std::string> outputs;
    auto rel = [&](const fs::path& p) { return (fs::path(u.entry) / p.filename()).generic_string(); };

    fs::path const_path = stem;
    const_path += ".const";
    fs::path model_path;
    if (u.method == "dae") {
        TrainCommand cmd;
        cmd.bits = s.at("k").get<std::vector<int>>();
        cmd.alpha = s.at("alpha").get<std::vector<double>>();
        cmd.seed = seed;
        const json t = s.value("train", json::object());
        cmd.train_snr_db = get_or(t, "train_snr_db", cmd.train_snr_db);
        cmd.num_const = get_or(t, "num_const", cmd.num_const);
        cmd.max_epochs = get_or(t, "max_epochs", cmd.max_epochs);
        cmd.patience = get_or(t, "patience", cmd.patience);
        cmd.restarts = get_or(t, "restarts", cmd.restarts);
        cmd.snr_list = get_or(t, "snr_list", cmd.snr_list);
        if (t.contains("select_snr_db"))
            cmd.select_snr_db = t.at("select_snr_db").get<double>();
        cmd.hidden_sizes = get_or(t, "hidden_sizes", cmd.hidden_sizes);
        model_path = stem;
        model_path += ".dae";
        cmd.model_output = model_path;
        cmd.constellation_output = const_path;
        run_train(cmd, log);
        outputs.push_back(rel(model_path));
    } else {
        BaselineCommand cmd;
        cmd.method = u.method;
        cmd.bits = s.at("k").get<std::vector<int>>();
        cmd.alpha = s.at("alpha").get<std::vector<double>>();
        cmd.grid_deg = get_or(s, "grid_deg", cmd.grid_deg);
        if (s.contains("rate_snr_db"))
            cmd.snr_db = s.at("rate_snr_db").get<double>();
        cmd.output = const_path;
        run_baseline(cmd, log);
    }
    outputs.push_back(rel(const_path));

    fs::path svg = stem;
    svg += ".svg";
    PlotCommand plot{"constellation", {const_path}, svg, {}, std::nullopt, {}};
    run_plot(plot);
    outputs.push_back(rel(svg));

    const unsigned workers = get_or(s, "workers", 1u);
    if (s.contains("mi_snr")) {
        EvalCommand ev;
        ev.metric = "mi";
        ev.inputs = {const_path};
        ev.snr_grid = s.at("mi_snr").get<std::string>();
        ev.quad_order = get_or(s, "quad_order", ev.quad_order);
        ev.workers = workers;
        ev.output = stem;
        ev.output += ".mi.csv";
        run_eval(ev);
        outputs.push_back(rel(ev.output));
    }
    if (s.contains("ser_snr")) {
        EvalCommand ev;
        ev.metric = "ser";
        ev.inputs = {model_path.empty() ? const_path : model_path};
        ev.snr_grid = s.at("ser_snr").get<std::string>();
        ev.trials = get_or<std::uint64_t>(s, "ser_trials", 100000);
        ev.seed = seed;
        ev.workers = workers;
        ev.output = stem;
        ev.output += ".ser.csv";
        run_eval(ev);
        outputs.push_back(rel(ev.output));
    }
    return outputs;
}

bool outputs_present(const json& record, const fs::path& out_dir)
{
    if (!record.contains("outputs"))
        return false;
    for (const json& o : record.at("outputs"))
        if (!fs::exists(out_dir / o.get<std::string>()))
            return false;
    return true;
}

}  // namespace

SweepOutcome run_sweep(const fs::path& manifest, const fs::path& out_dir, std::ostream& log)
{
    const std::vector<Unit> units = expand(parse_json(read_text_file(manifest), manifest));
    fs::create_directories(out_dir);
    const fs::path index_path = out_dir / "index.json";

    json previous = json::object();
    if (fs::exists(index_path)) {
        const json old = parse_json(read_text_file(index_path), index_path);
        for (const json& r : old.value("units", json::array()))
            previous[r.at("entry").get<std::string>() + "/" + r.at("method").get<std::string>()] = r;
    }

    json index{{"schema", kIndexSchema}, {"tool_version", kToolVersion}, {"units", json::array()}};
    auto flush = [&] { write_text_file(index_path, index.dump(2) + "\n"); };

    SweepOutcome outcome;
    for (const Unit& u : units) {
        const std::string key = u.entry + "/" + u.method;
        if (previous.contains(key)) {
            const json& r = previous.at(key);
            if (r.value("status", "") == "ok" && r.value("hash", "") == u.hash && outputs_present(r, out_dir)) {
                log << key << ": unchanged, skipped\n";
                index["units"].push_back(r);
                ++outcome.skipped;
                flush();
                continue;
            }
        }
        json record{{"entry", u.entry}, {"method", u.method}, {"hash", u.hash}};
        std::ostringstream unit_log;
        try {
            const fs::path dir = out_dir / u.entry;
            fs::create_directories(dir);
            record["outputs"] = run_unit(u, dir, unit_log);
            record["status"] = "ok";
            ++outcome.completed;
            log << key << ": ok\n";
        } catch (const Error& e) {
            record["status"] = "failed";
            record["error"] = std::string(to_string(e.code())) + ": " + e.what();
            const int code = exit_code_for(e);
            outcome.exit_code = std::max(outcome.exit_code, code);
            ++outcome.failed;
            log << key << ": failed (" << record["error"].get<std::string>() << ")\n";
        } catch (const json::exception& e) {
            record["status"] = "failed";
            record["error"] = std::string("ParseError: ") + e.what();
            outcome.exit_code = std::max<int>(outcome.exit_code, kExitValidation);
            ++outcome.failed;
            log << key << ": failed (" << record["error"].get<std::string>() << ")\n";
        }
        record["log"] = unit_log.str();
        index["units"].push_back(std::move(record));
        flush();
    }
    flush();
    log << "sweep: " << outcome.completed << " completed, " << outcome.skipped << " skipped, " << outcome.failed
        << " failed\n";
    return outcome;
}

}  // namespace maclab
