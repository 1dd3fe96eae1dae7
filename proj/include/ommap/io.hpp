#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "ommap/bip.hpp"
#include "ommap/errors.hpp"
#include "ommap/measures.hpp"

namespace ommap {

using json = nlohmann::json;

/// Schema violation in a configuration; `path` is a JSON pointer to the field.
class ConfigError : public InputError {
public:
    ConfigError(const std::string& path, const std::string& what)
        : InputError(path + ": " + what), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Parses text, reporting line and column on syntax errors.
json parse_json_text(const std::string& text, const std::string& source = "<config>");
json read_json_file(const std::filesystem::path& path);

/// Reader over one JSON object that remembers which fields were consumed.
class Fields {
public:
    Fields(const json& j, std::string path);

    bool has(const std::string& key) const;
    const json& raw(const std::string& key) const;
    std::string path(const std::string& key) const { return path_ + "/" + key; }

    double number(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    long long integer(const std::string& key) const;
    long long integer(const std::string& key, long long fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::string string(const std::string& key) const;
    std::string string(const std::string& key, const std::string& fallback) const;
    Vector vector(const std::string& key) const;
    Matrix matrix(const std::string& key) const;
    std::vector<double> numbers(const std::string& key) const;

    /// ConfigError for every key that was never read.
    void finish() const;

private:
    void touch(const std::string& key) const;

    const json& j_;
    std::string path_;
    mutable std::vector<std::string> seen_;
};

Vector vector_from_json(const json& j, const std::string& path);
Matrix matrix_from_json(const json& j, const std::string& path);
json to_json(const Vector& v);
json to_json(const Matrix& m);

/// {"type":"gaussian","mean":[...],"eigenvalues":[...],"basis":[[...]]?} |
/// {"type":"besov1","s":..,"d":..,"eta":..,"dim":..} |
/// {"type":"density1d","name":"mixture|spike|liminf_only|om_not_strong","params":{...}} |
/// {"type":"crosses"}
Measure measure_from_json(const json& j, const std::string& path = "");
json measure_to_json(const Measure& mu);

Prior prior_from_json(const json& j, const std::string& path = "");
LinearObservation observation_from_json(const json& j, const std::string& path = "");
InverseProblem problem_from_json(const json& j, const std::string& path = "");

/// {"p": 2, "weights": [...]?}; default unweighted l2.
WeightedSeqSpace norm_from_json(const json* j, int dim, const std::string& path = "");
/// Explicit list, or {"r0":..,"levels":..} for a geometric schedule.
Vector radii_from_json(const json& j, const std::string& path);

/// CSV file with a header row naming each column.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    void row_text(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
    std::size_t columns_;
};

/// Shortest round-trip representation; "inf", "-inf", "nan" for non-finite values.
std::string format_double(double v);

}  // namespace ommap
