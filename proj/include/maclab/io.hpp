#pragma once

#include "maclab/core.hpp"
#include "maclab/dae.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace maclab {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::string_view kConstellationSchema = "maclab.constellation/1";
inline constexpr std::string_view kModelSchema = "maclab.model/1";
inline constexpr std::string_view kCurveSchema = "maclab.curve/1";

/// Shortest text that is always "%.17g" of the value.
std::string format_double(double value);
double parse_double(std::string_view text);

/// Ordered `key = value` text document. Lines starting with '#' are comments.
class KvDocument {
public:
    void set(std::string key, std::string value);
    void set_number(std::string key, double value);
    void set_numbers(std::string key, std::span<const double> values);
    void set_integer(std::string key, long long value);

    bool has(std::string_view key) const;
    const std::string& text(std::string_view key) const;
    double number(std::string_view key) const;
    std::vector<double> numbers(std::string_view key) const;
    long long integer(std::string_view key) const;
    std::vector<long long> integers(std::string_view key) const;

    /// Keys starting with prefix, in document order.
    std::vector<std::pair<std::string, std::string>> with_prefix(std::string_view prefix) const;

    std::string serialize(std::string_view header_comment) const;
    static KvDocument parse(std::string_view text);

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Generation record carried by every constellation and model file.
struct Provenance {
    std::string method;  ///< dae | pam | qpsk_rot_rate | qpsk_rot_md | parallelogram | external
    std::vector<std::pair<std::string, std::string>> parameters;
    std::string tool_version{kToolVersion};

    void add(std::string key, std::string value) { parameters.emplace_back(std::move(key), std::move(value)); }
    void add(std::string key, double value) { add(std::move(key), format_double(value)); }
    const std::string* find(std::string_view key) const;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct ConstellationFile {
    Scenario scenario;
    std::vector<Constellation> users;
    Provenance provenance;
};

std::string write_constellation(const ConstellationFile& file);
ConstellationFile read_constellation(std::string_view text);

/// Full model file: parameters, extraction statistics, history and Adam state.
std::string write_model(const DaeModel& model, const Provenance& provenance);
DaeModel read_model(std::string_view text, Provenance* provenance = nullptr);

struct CurveFile {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> columns;  ///< first column is snr_db
    std::vector<std::vector<double>> rows;

    const std::string* meta(std::string_view key) const;
    std::size_t column(std::string_view name) const;
};

/// Throws when the SNR column is not strictly increasing or row widths differ.
void validate_curve(const CurveFile& curve);
std::string write_curve(const CurveFile& curve);
CurveFile read_curve(std::string_view text);

/// `start:step:stop` (inclusive), a comma list, or a single value.
std::vector<double> parse_snr_grid(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
/// Writes through a temporary file and rename, so readers never see partial output.
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// 64-bit FNV-1a, used for content hashing in sweeps.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace maclab
