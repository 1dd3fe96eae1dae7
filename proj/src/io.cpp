#include "ommap/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "ommap/counterexamples.hpp"

namespace ommap {

json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < byte; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col), "invalid JSON");
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path.string());
}

// ---------------------------------------------------------------- Fields

Fields::Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
}

void Fields::touch(const std::string& key) const {
    if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) seen_.push_back(key);
}

bool Fields::has(const std::string& key) const {
    touch(key);
    return j_.contains(key);
}

const json& Fields::raw(const std::string& key) const {
    touch(key);
    if (!j_.contains(key)) throw ConfigError(path(key), "required field missing");
    return j_.at(key);
}

double Fields::number(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    return v.get<double>();
}

double Fields::number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

long long Fields::integer(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(path(key), "expected an integer");
    return v.get<long long>();
}

long long Fields::integer(const std::string& key, long long fallback) const {
    return has(key) ? integer(key) : fallback;
}

bool Fields::boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(path(key), "expected true or false");
    return v.get<bool>();
}

std::string Fields::string(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(path(key), "expected a string");
    return v.get<std::string>();
}

std::string Fields::string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
}

Vector Fields::vector(const std::string& key) const { return vector_from_json(raw(key), path(key)); }
Matrix Fields::matrix(const std::string& key) const { return matrix_from_json(raw(key), path(key)); }

std::vector<double> Fields::numbers(const std::string& key) const {
    const Vector v = vector(key);
    return std::vector<double>(v.data(), v.data() + v.size());
}

void Fields::finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
        if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
            throw ConfigError(path(it.key()), "unknown field");
}

Vector vector_from_json(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(path + "/" + std::to_string(i), "expected a number");
        v[static_cast<int>(i)] = j[i].get<double>();
    }
    return v;
}

Matrix matrix_from_json(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of rows");
    const Vector first = vector_from_json(j[0], path + "/0");
    Matrix m(j.size(), first.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Vector r = vector_from_json(j[i], path + "/" + std::to_string(i));
        if (r.size() != first.size()) throw ConfigError(path + "/" + std::to_string(i), "rows differ in length");
        m.row(static_cast<int>(i)) = r;
    }
    return m;
}

json to_json(const Vector& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(std::isfinite(v[i]) ? json(v[i]) : json(format_double(v[i])));
    return a;
}

json to_json(const Matrix& m) {
    json a = json::array();
    for (int i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
    return a;
}

// ---------------------------------------------------------------- measures

namespace {

SpectralOperator covariance_from_fields(const Fields& f, int dim) {
    const Vector ev = f.vector("eigenvalues");
    if (ev.size() != dim) throw ConfigError(f.path("eigenvalues"), "length must match the mean");
    if ((ev.array() < 0.0).any()) throw ConfigError(f.path("eigenvalues"), "eigenvalues must be non-negative");
    if (!f.has("basis")) return SpectralOperator::diagonal(ev);
    const Matrix b = f.matrix("basis");
    if (b.rows() != dim || b.cols() != dim) throw ConfigError(f.path("basis"), "basis must be dim x dim");
    try {
        return SpectralOperator::from_eigenpairs(ev, b);
    } catch (const std::exception& e) {
        throw ConfigError(f.path("basis"), e.what());
    }
}

double spike_n(const Fields& p) {
    const json& v = p.raw("n");
    if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity")) return kInf;
    const double n = p.number("n");
    if (!(n >= 1.0)) throw ConfigError(p.path("n"), "n must be at least 1 or \"inf\"");
    return n;
}

}  // namespace

Measure measure_from_json(const json& j, const std::string& path) {
    Fields f(j, path);
    const std::string type = f.string("type");
    try {
        if (type == "gaussian") {
            const Vector mean = f.vector("mean");
            const SpectralOperator c = covariance_from_fields(f, static_cast<int>(mean.size()));
            f.finish();
            return GaussianMeasure(mean, c);
        }
        if (type == "besov1") {
            const double s = f.number("s");
            const long long d = f.integer("d");
            const double eta = f.number("eta");
            const long long dim = f.integer("dim");
            f.finish();
            if (d < 1 || dim < 1) throw ConfigError(path, "d and dim must be positive");
            return BesovMeasure(s, static_cast<int>(d), eta, static_cast<int>(dim));
        }
        if (type == "crosses") {
            f.finish();
            return crosses_measure();
        }
        if (type == "density1d") {
            const std::string name = f.string("name");
            const json empty = json::object();
            Fields p(f.has("params") ? f.raw("params") : empty, f.path("params"));
            f.finish();
            if (name == "mixture") {
                const double t = p.number("t");
                const double r = p.number("r", 5.0);
                p.finish();
                if (!(std::abs(t) < 1.0)) throw ConfigError(p.path("t"), "|t| must be below 1");
                return mixture_density1d(t, r);
            }
            if (name == "spike") {
                const double n = spike_n(p);
                p.finish();
                return spike_density1d(n);
            }
            if (name == "liminf_only") {
                const long long depth = p.integer("depth", 40);
                p.finish();
                return LiminfOnlyMeasure(static_cast<int>(depth)).density1d();
            }
            if (name == "om_not_strong") {
                const long long levels = p.integer("levels", 30);
                p.finish();
                return OmNotStrongMeasure(static_cast<int>(levels)).density1d();
            }
            throw ConfigError(f.path("name"), "unknown registered example '" + name + "'");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path.empty() ? "/" : path, e.what());
    }
    throw ConfigError(f.path("type"), "unknown measure type '" + type + "'");
}

json measure_to_json(const Measure& mu) {
    return std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GaussianMeasure>) {
                json j{{"type", "gaussian"}, {"mean", to_json(m.mean)}, {"eigenvalues", to_json(m.covariance.eigenvalues())}};
                if (m.covariance.has_basis()) j["basis"] = to_json(m.covariance.basis());
                return j;
            } else if constexpr (std::is_same_v<T, BesovMeasure>) {
                return {{"type", "besov1"}, {"s", m.s}, {"d", m.d}, {"eta", m.eta}, {"dim", m.truncation}};
            } else if constexpr (std::is_same_v<T, Density1D>) {
                return {{"type", "density1d"}, {"name", m.name()}};
            } else {
                return {{"type", "crosses"}};
            }
        },
        mu);
}

Prior prior_from_json(const json& j, const std::string& path) {
    Measure mu = measure_from_json(j, path);
    if (auto* g = std::get_if<GaussianMeasure>(&mu)) return *g;
    if (auto* b = std::get_if<BesovMeasure>(&mu)) return *b;
    throw ConfigError(path + "/type", "a prior must be gaussian or besov1");
}

LinearObservation observation_from_json(const json& j, const std::string& path) {
    Fields f(j, path);
    const Matrix o = f.matrix("matrix");
    const Vector y = f.vector("data");
    const json& nc = f.raw("noise_cov");
    f.finish();
    SpectralOperator noise;
    if (nc.is_array() && !nc.empty() && nc[0].is_array()) {
        const Matrix m = matrix_from_json(nc, path + "/noise_cov");
        if (m.rows() != m.cols()) throw ConfigError(path + "/noise_cov", "matrix must be square");
        noise = SpectralOperator::from_matrix(m);
    } else {
        noise = SpectralOperator::diagonal(vector_from_json(nc, path + "/noise_cov"));
    }
    try {
        return LinearObservation(o, noise, y);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path.empty() ? "/" : path, e.what());
    }
}

InverseProblem problem_from_json(const json& j, const std::string& path) {
    Fields f(j, path);
    Prior prior = prior_from_json(f.raw("prior"), f.path("prior"));
    LinearObservation obs = observation_from_json(f.raw("observation"), f.path("observation"));
    f.finish();
    const int k = std::visit([](const auto& m) { return m.dim(); }, prior);
    if (k != obs.K()) throw ConfigError(path + "/observation/matrix", "column count must equal the prior dimension");
    return {std::move(prior), std::move(obs)};
}

WeightedSeqSpace norm_from_json(const json* j, int dim, const std::string& path) {
    if (!j) return WeightedSeqSpace::uniform(dim, 2.0);
    Fields f(*j, path);
    double p = 2.0;
    if (f.has("p")) {
        const json& v = f.raw("p");
        if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity"))
            p = kInf;
        else
            p = f.number("p");
    }
    Vector w = f.has("weights") ? f.vector("weights") : Vector(Vector::Ones(dim));
    f.finish();
    if (w.size() != dim) throw ConfigError(path + "/weights", "length must equal the dimension");
    try {
        return WeightedSeqSpace(p, w);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
}

Vector radii_from_json(const json& j, const std::string& path) {
    Vector r;
    if (j.is_object()) {
        Fields f(j, path);
        const double r0 = f.number("r0", 0.5);
        const long long levels = f.integer("levels", 10);
        f.finish();
        if (!(r0 > 0.0) || levels < 1) throw ConfigError(path, "need r0 > 0 and levels >= 1");
        r = geometric_radii(r0, static_cast<int>(levels));
    } else {
        r = vector_from_json(j, path);
    }
    if (r.size() == 0) throw ConfigError(path, "at least one radius required");
    for (int i = 0; i < r.size(); ++i) {
        if (!(r[i] > 0.0)) throw ConfigError(path + "/" + std::to_string(i), "radii must be positive");
        if (i > 0 && !(r[i] < r[i - 1])) throw ConfigError(path, "radii must be strictly decreasing");
    }
    return r;
}

// ---------------------------------------------------------------- CSV

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row_text(header);
}

void CsvWriter::row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    row_text(cells);
}

void CsvWriter::row_text(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw InputError("CsvWriter: row width differs from the header");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
}

}  // namespace ommap
