#include "maclab/io.hpp"

#include "maclab/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace maclab {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> tokens(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ')
            ++i;
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ')
            ++i;
        if (i > start)
            out.push_back(s.substr(start, i - start));
    }
    return out;
}

std::string join_numbers(std::span<const double> values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i)
            out += ' ';
        out += format_double(values[i]);
    }
    return out;
}

void write_scenario(KvDocument& doc, const Scenario& s)
{
    doc.set_integer("users", static_cast<long long>(s.users()));
    std::string b;
    for (std::size_t i = 0; i < s.bits.size(); ++i)
        b += (i ? " " : "") + std::to_string(s.bits[i]);
    doc.set("bits", b);
    doc.set_numbers("alpha", s.alpha);
}

Scenario read_scenario(const KvDocument& doc)
{
    Scenario s;
    for (long long k : doc.integers("bits"))
        s.bits.push_back(static_cast<int>(k));
    s.alpha = doc.numbers("alpha");
    if (doc.integer("users") != static_cast<long long>(s.bits.size()))
        throw Error(ErrorCode::ParseError, "user count does not match the bits list");
    validate_scenario(s);
    return s;
}

void write_provenance(KvDocument& doc, const Provenance& p)
{
    doc.set("provenance.method", p.method);
    doc.set("provenance.tool_version", p.tool_version);
    for (const auto& [key, value] : p.parameters)
        doc.set("provenance.param." + key, value);
}

Provenance read_provenance(const KvDocument& doc)
{
    Provenance p;
    p.method = doc.text("provenance.method");
    p.tool_version = doc.text("provenance.tool_version");
    const std::string prefix = "provenance.param.";
    for (auto& [key, value] : doc.with_prefix(prefix))
        p.parameters.emplace_back(key.substr(prefix.size()), value);
    return p;
}

void check_schema(const KvDocument& doc, std::string_view expected)
{
    if (!doc.has("schema") || doc.text("schema") != expected)
        throw Error(ErrorCode::ParseError, "expected schema " + std::string(expected));
}

PowerRegime infer_regime(std::span<const ComplexPoint> pts)
{
    if (std::abs(mean_of(pts)) > kStructuralTol)
        return PowerRegime::Unnormalized;
    const double power = mean_power_of(pts);
    if (std::abs(power - 1.0) <= kStructuralTol)
        return PowerRegime::Unit;
    return power <= 1.0 + kStructuralTol ? PowerRegime::SubUnit : PowerRegime::Unnormalized;
}

std::string seed_text(const RngSeed& s) { return std::to_string(s.seed) + " " + std::to_string(s.stream_id); }

RngSeed parse_seed(const KvDocument& doc, std::string_view key)
{
    const auto t = tokens(doc.text(key));
    if (t.size() != 2)
        throw Error(ErrorCode::ParseError, "seed entry needs two integers: " + std::string(key));
    auto parse_u64 = [&](std::string_view v) {
        std::uint64_t out = 0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
        if (r.ec != std::errc() || r.ptr != v.data() + v.size())
            throw Error(ErrorCode::ParseError, "bad seed value in " + std::string(key));
        return out;
    };
    return RngSeed{parse_u64(t[0]), parse_u64(t[1])};
}

}  // namespace

std::string format_double(double value)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

double parse_double(std::string_view text)
{
    text = trim(text);
    double out = 0.0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), out);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size() || text.empty())
        throw Error(ErrorCode::ParseError, "not a number: '" + std::string(text) + "'");
    return out;
}

void KvDocument::set(std::string key, std::string value)
{
    if (key.empty() || key.find_first_of(" =\n#") != std::string::npos || value.find('\n') != std::string::npos)
        throw Error(ErrorCode::InvalidArgument, "invalid key/value for key '" + key + "'");
    for (auto& entry : entries_)
        if (entry.first == key) {
            entry.second = std::move(value);
            return;
        }
    entries_.emplace_back(std::move(key), std::move(value));
}

void KvDocument::set_number(std::string key, double value) { set(std::move(key), format_double(value)); }

void KvDocument::set_numbers(std::string key, std::span<const double> values)
{
    set(std::move(key), join_numbers(values));
}

void KvDocument::set_integer(std::string key, long long value) { set(std::move(key), std::to_string(value)); }

bool KvDocument::has(std::string_view key) const
{
    for (const auto& entry : entries_)
        if (entry.first == key)
            return true;
    return false;
}

const std::string& KvDocument::text(std::string_view key) const
{
    for (const auto& entry : entries_)
        if (entry.first == key)
            return entry.second;
    throw Error(ErrorCode::ParseError, "missing key '" + std::string(key) + "'");
}

double KvDocument::number(std::string_view key) const { return parse_double(text(key)); }

std::vector<double> KvDocument::numbers(std::string_view key) const
{
    std::vector<double> out;
    for (auto t : tokens(text(key)))
        out.push_back(parse_double(t));
    return out;
}

long long KvDocument::integer(std::string_view key) const
{
    const auto all = integers(key);
    if (all.size() != 1)
        throw Error(ErrorCode::ParseError, "expected one integer for '" + std::string(key) + "'");
    return all.front();
}

std::vector<long long> KvDocument::integers(std::string_view key) const
{
    std::vector<long long> out;
    for (auto t : tokens(text(key))) {
        long long v = 0;
        const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
        if (r.ec != std::errc() || r.ptr != t.data() + t.size())
            throw Error(ErrorCode::ParseError, "not an integer in '" + std::string(key) + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> KvDocument::with_prefix(std::string_view prefix) const
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& entry : entries_)
        if (std::string_view(entry.first).starts_with(prefix))
            out.push_back(entry);
    return out;
}

std::string KvDocument::serialize(std::string_view header_comment) const
{
    std::string out;
    if (!header_comment.empty())
        out += "# " + std::string(header_comment) + "\n";
    for (const auto& [key, value] : entries_)
        out += key + " = " + value + "\n";
    return out;
}

KvDocument KvDocument::parse(std::string_view text)
{
    KvDocument doc;
    int line_no = 0;
    for (auto line : split(text, '\n')) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        const auto pos = t.find(" = ");
        std::string key, value;
        if (pos != std::string_view::npos) {
            key = std::string(trim(t.substr(0, pos)));
            value = std::string(trim(t.substr(pos + 3)));
        } else if (t.ends_with(" =")) {
            key = std::string(trim(t.substr(0, t.size() - 2)));
        } else {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + " is not 'key = value'");
        }
        if (doc.has(key))
            throw Error(ErrorCode::ParseError, "duplicate key '" + key + "'");
        doc.entries_.emplace_back(std::move(key), std::move(value));
    }
    return doc;
}

const std::string* Provenance::find(std::string_view key) const
{
    for (const auto& [k, v] : parameters)
        if (k == key)
            return &v;
    return nullptr;
}

std::string write_constellation(const ConstellationFile& file)
{
    validate_scenario(file.scenario);
    if (file.users.size() != file.scenario.users())
        throw Error(ErrorCode::ShapeMismatch, "constellation count does not match the scenario");
    KvDocument doc;
    doc.set("schema", std::string(kConstellationSchema));
    write_scenario(doc, file.scenario);
    write_provenance(doc, file.provenance);
    for (std::size_t i = 0; i < file.users.size(); ++i) {
        const Constellation& c = file.users[i];
        if (c.bits() != file.scenario.bits[i])
            throw Error(ErrorCode::ShapeMismatch, "user constellation size does not match the scenario");
        const std::string prefix = "user." + std::to_string(i + 1) + ".";
        doc.set_number(prefix + "power", c.mean_power());
        for (std::size_t l = 0; l < c.size(); ++l) {
            const double iq[2] = {c[l].real(), c[l].imag()};
            doc.set_numbers(prefix + "point." + std::to_string(l), iq);
        }
    }
    return doc.serialize("maclab constellation file");
}

ConstellationFile read_constellation(std::string_view text)
{
    const KvDocument doc = KvDocument::parse(text);
    check_schema(doc, kConstellationSchema);
    ConstellationFile file;
    file.scenario = read_scenario(doc);
    file.provenance = read_provenance(doc);
    for (std::size_t i = 0; i < file.scenario.users(); ++i) {
        const std::string prefix = "user." + std::to_string(i + 1) + ".";
        const std::size_t n = std::size_t{1} << file.scenario.bits[i];
        std::vector<ComplexPoint> pts(n);
        for (std::size_t l = 0; l < n; ++l) {
            const auto iq = doc.numbers(prefix + "point." + std::to_string(l));
            if (iq.size() != 2)
                throw Error(ErrorCode::ParseError, "point entries need exactly two numbers");
            pts[l] = {iq[0], iq[1]};
        }
        const PowerRegime regime = infer_regime(pts);
        file.users.emplace_back(file.scenario.bits[i], std::move(pts), regime);
    }
    return file;
}

std::string write_model(const DaeModel& model, const Provenance& provenance)
{
    const DaeConfig& c = model.config();
    const ParamLayout& layout = model.layout();
    const auto params = model.params();
    KvDocument doc;
    doc.set("schema", std::string(kModelSchema));
    write_scenario(doc, c.scenario);
    write_provenance(doc, provenance);
    doc.set_number("config.train_snr_db", c.train_snr_db);
    doc.set_integer("config.num_const", c.num_const);
    doc.set_integer("config.max_epochs", c.max_epochs);
    doc.set_integer("config.patience", c.patience);
    std::string hidden;
    for (std::size_t i = 0; i < c.hidden_sizes.size(); ++i)
        hidden += (i ? " " : "") + std::to_string(c.hidden_sizes[i]);
    doc.set("config.hidden_sizes", hidden);
    doc.set_number("config.adam.step_size", c.adam.step_size);
    doc.set_number("config.adam.beta1", c.adam.beta1);
    doc.set_number("config.adam.beta2", c.adam.beta2);
    doc.set_number("config.adam.epsilon", c.adam.epsilon);
    doc.set("config.init_seed", seed_text(c.init_seed));
    doc.set("config.noise_seed", seed_text(c.noise_seed));
    doc.set_number("config.eps_norm", c.eps_norm);

    auto put = [&](const std::string& key, const ParamLayout::Block& b) {
        doc.set_numbers(key, params.subspan(b.offset, b.size()));
    };
    for (std::size_t i = 0; i < c.scenario.users(); ++i) {
        const std::string n = std::to_string(i + 1);
        put("param.enc_weight." + n, layout.enc_weight[i]);
        put("param.enc_bias." + n, layout.enc_bias[i]);
        put("param.scale_raw." + n, layout.scale_raw[i]);
    }
    for (std::size_t l = 0; l < layout.dec_weight.size(); ++l) {
        const std::string n = std::to_string(l + 1);
        put("param.dec_weight." + n, layout.dec_weight[l]);
        put("param.dec_bias." + n, layout.dec_bias[l]);
    }
    if (model.stats()) {
        for (std::size_t i = 0; i < c.scenario.users(); ++i) {
            const std::string n = std::to_string(i + 1);
            const double mean[2] = {model.stats()->mean[i][0], model.stats()->mean[i][1]};
            doc.set_numbers("stats.mean." + n, mean);
            doc.set_number("stats.power." + n, model.stats()->power[i]);
        }
    }
    const TrainingHistory& h = model.history();
    doc.set_integer("history.epochs", static_cast<long long>(h.loss.size()));
    doc.set_integer("history.best_epoch", h.best_epoch);
    doc.set("history.stop_reason", h.stop_reason);
    doc.set_numbers("history.loss", h.loss);
    const AdamState& a = model.adam_state();
    doc.set_integer("adam.step", a.step);
    doc.set_numbers("adam.m", a.m);
    doc.set_numbers("adam.v", a.v);
    return doc.serialize("maclab model file");
}

DaeModel read_model(std::string_view text, Provenance* provenance)
{
    const KvDocument doc = KvDocument::parse(text);
    check_schema(doc, kModelSchema);
    DaeConfig c;
    c.scenario = read_scenario(doc);
    c.train_snr_db = doc.number("config.train_snr_db");
    c.num_const = static_cast<int>(doc.integer("config.num_const"));
    c.max_epochs = static_cast<int>(doc.integer("config.max_epochs"));
    c.patience = static_cast<int>(doc.integer("config.patience"));
    c.hidden_sizes.clear();
    for (long long h : doc.integers("config.hidden_sizes"))
        c.hidden_sizes.push_back(static_cast<int>(h));
    c.adam.step_size = doc.number("config.adam.step_size");
    c.adam.beta1 = doc.number("config.adam.beta1");
    c.adam.beta2 = doc.number("config.adam.beta2");
    c.adam.epsilon = doc.number("config.adam.epsilon");
    c.init_seed = parse_seed(doc, "config.init_seed");
    c.noise_seed = parse_seed(doc, "config.noise_seed");
    c.eps_norm = doc.number("config.eps_norm");

    const ParamLayout layout(c.scenario, c.hidden_sizes);
    std::vector<double> params(layout.total);
    auto get = [&](const std::string& key, const ParamLayout::Block& b) {
        const auto values = doc.numbers(key);
        if (values.size() != b.size())
            throw Error(ErrorCode::ParseError, "parameter block '" + key + "' has the wrong size");
        std::copy(values.begin(), values.end(), params.begin() + static_cast<std::ptrdiff_t>(b.offset));
    };
    for (std::size_t i = 0; i < c.scenario.users(); ++i) {
        const std::string n = std::to_string(i + 1);
        get("param.enc_weight." + n, layout.enc_weight[i]);
        get("param.enc_bias." + n, layout.enc_bias[i]);
        get("param.scale_raw." + n, layout.scale_raw[i]);
    }
    for (std::size_t l = 0; l < layout.dec_weight.size(); ++l) {
        const std::string n = std::to_string(l + 1);
        get("param.dec_weight." + n, layout.dec_weight[l]);
        get("param.dec_bias." + n, layout.dec_bias[l]);
    }

    DaeModel model(c, std::move(params));
    if (doc.has("stats.power.1")) {
        ExtractionStats stats;
        for (std::size_t i = 0; i < c.scenario.users(); ++i) {
            const std::string n = std::to_string(i + 1);
            const auto mean = doc.numbers("stats.mean." + n);
            if (mean.size() != 2)
                throw Error(ErrorCode::ParseError, "stats.mean entries need two numbers");
            stats.mean.emplace_back(mean[0], mean[1]);
            stats.power.push_back(doc.number("stats.power." + n));
        }
        model.set_stats(std::move(stats));
    }
    TrainingHistory h;
    h.loss = doc.numbers("history.loss");
    h.best_epoch = static_cast<int>(doc.integer("history.best_epoch"));
    h.stop_reason = doc.text("history.stop_reason");
    if (doc.integer("history.epochs") != static_cast<long long>(h.loss.size()))
        throw Error(ErrorCode::ParseError, "history length mismatch");
    model.set_history(std::move(h));
    AdamState a;
    a.step = doc.integer("adam.step");
    a.m = doc.numbers("adam.m");
    a.v = doc.numbers("adam.v");
    model.set_adam_state(std::move(a));
    if (provenance)
        *provenance = read_provenance(doc);
    return model;
}

const std::string* CurveFile::meta(std::string_view key) const
{
    for (const auto& [k, v] : metadata)
        if (k == key)
            return &v;
    return nullptr;
}

std::size_t CurveFile::column(std::string_view name) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name)
            return i;
    throw Error(ErrorCode::InvalidArgument, "curve has no column '" + std::string(name) + "'");
}

void validate_curve(const CurveFile& curve)
{
    if (curve.columns.empty() || curve.columns.front() != "snr_db")
        throw Error(ErrorCode::ParseError, "first curve column must be snr_db");
    for (std::size_t r = 0; r < curve.rows.size(); ++r) {
        if (curve.rows[r].size() != curve.columns.size())
            throw Error(ErrorCode::ParseError, "curve row " + std::to_string(r + 1) + " has the wrong width");
        if (r > 0 && !(curve.rows[r][0] > curve.rows[r - 1][0]))
            throw Error(ErrorCode::ParseError, "curve SNR column must be strictly increasing");
    }
}

std::string write_curve(const CurveFile& curve)
{
    validate_curve(curve);
    std::string out = "# schema: " + std::string(kCurveSchema) + "\n";
    for (const auto& [k, v] : curve.metadata) {
        if (k.find(':') != std::string::npos || v.find('\n') != std::string::npos)
            throw Error(ErrorCode::InvalidArgument, "invalid curve metadata entry '" + k + "'");
        out += "# " + k + ": " + v + "\n";
    }
    for (std::size_t c = 0; c < curve.columns.size(); ++c)
        out += (c ? "," : "") + curve.columns[c];
    out += "\n";
    for (const auto& row : curve.rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out += (c ? "," : "") + format_double(row[c]);
        out += "\n";
    }
    return out;
}

CurveFile read_curve(std::string_view text)
{
    CurveFile curve;
    bool schema_seen = false;
    for (auto line : split(text, '\n')) {
        const auto t = trim(line);
        if (t.empty())
            continue;
        if (t.front() == '#') {
            const auto body = trim(t.substr(1));
            const auto pos = body.find(": ");
            if (pos == std::string_view::npos)
                continue;
            const std::string key(body.substr(0, pos));
            const std::string value(trim(body.substr(pos + 2)));
            if (key == "schema") {
                if (value != kCurveSchema)
                    throw Error(ErrorCode::ParseError, "unknown curve schema " + value);
                schema_seen = true;
            } else {
                curve.metadata.emplace_back(key, value);
            }
            continue;
        }
        if (curve.columns.empty()) {
            for (auto c : split(t, ','))
                curve.columns.emplace_back(trim(c));
            continue;
        }
        std::vector<double> row;
        for (auto c : split(t, ','))
            row.push_back(parse_double(c));
        curve.rows.push_back(std::move(row));
    }
    if (!schema_seen)
        throw Error(ErrorCode::ParseError, "curve file lacks a schema line");
    validate_curve(curve);
    return curve;
}

std::vector<double> parse_snr_grid(std::string_view text)
{
    text = trim(text);
    if (text.empty())
        throw Error(ErrorCode::InvalidArgument, "empty SNR grid");
    std::vector<double> out;
    if (text.find(':') != std::string_view::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3)
            throw Error(ErrorCode::InvalidArgument, "SNR range must be start:step:stop");
        const double start = parse_double(parts[0]);
        const double step = parse_double(parts[1]);
        const double stop = parse_double(parts[2]);
        if (!(step > 0.0) || stop < start)
            throw Error(ErrorCode::InvalidArgument, "SNR range needs a positive step and stop >= start");
        const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
        if (count > 100000)
            throw Error(ErrorCode::InvalidArgument, "SNR range is too long");
        for (long long j = 0; j < count; ++j)
            out.push_back(start + static_cast<double>(j) * step);
    } else {
        for (auto part : split(text, ','))
            out.push_back(parse_double(part));
    }
    for (std::size_t i = 1; i < out.size(); ++i)
        if (!(out[i] > out[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "SNR grid must be strictly increasing");
    return out;
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::uint64_t fnv1a64(std::string_view data)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace maclab
