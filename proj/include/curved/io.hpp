#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "curved/confusion.hpp"
#include "curved/errors.hpp"
#include "curved/metric.hpp"
#include "curved/network.hpp"
#include "curved/types.hpp"

namespace curved::io {

using json = nlohmann::ordered_json;

/// Shortest representation that parses back to the identical double; always
/// at least the 17-significant-digit round-trip guarantee.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline double parse_double_field(std::string_view field, const std::string& file, long line) {
    const std::string_view t = trim(field);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw ParseError(file, line, "not a number: '" + std::string(t) + "'");
    return v;
}

inline long long parse_int_field(std::string_view field, const std::string& file, long line) {
    const std::string_view t = trim(field);
    long long v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw ParseError(file, line, "not an integer: '" + std::string(t) + "'");
    return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    return out;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "' for reading");
    return in;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    auto out = open_output(path);
    out << text;
}

// ---------------------------------------------------------------------------
// Plain-text matrix format: one row per line, comma-separated decimal values.
// ---------------------------------------------------------------------------

template <typename Derived>
void write_matrix_csv(const std::string& path, const Eigen::MatrixBase<Derived>& m) {
    auto out = open_output(path);
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            if (c > 0) out << ',';
            out << format_double(static_cast<double>(m(r, c)));
        }
        out << '\n';
    }
}

inline MatrixX<double> read_matrix_csv(const std::string& path) {
    auto in = open_input(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_double_field(f, path, line_no));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(path, line_no,
                             "expected " + std::to_string(rows.front().size()) +
                                 " fields, got " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");
    MatrixX<double> m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c)
            m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return m;
}

// ---------------------------------------------------------------------------
// Metric tensor: CSV of the raw tensor, or JSON {k, g, provenance}.
// ---------------------------------------------------------------------------

inline void write_metric_csv(const std::string& path, const Metric& m) {
    write_matrix_csv(path, m.tensor());
}

inline Metric read_metric_csv(const std::string& path) {
    return Metric::from_matrix_tolerant(read_matrix_csv(path));
}

inline json matrix_to_json(const MatrixX<double>& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline MatrixX<double> matrix_from_json(const json& rows, const std::string& what) {
    if (!rows.is_array() || rows.empty())
        throw ValidationError(what + ": expected a non-empty array of rows");
    const Index nr = static_cast<Index>(rows.size());
    const Index nc = static_cast<Index>(rows.at(0).size());
    MatrixX<double> m(nr, nc);
    for (Index r = 0; r < nr; ++r) {
        const json& row = rows.at(static_cast<std::size_t>(r));
        if (!row.is_array() || static_cast<Index>(row.size()) != nc)
            throw ValidationError(what + ": ragged rows");
        for (Index c = 0; c < nc; ++c)
            m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

inline void write_metric_json(const std::string& path, const Metric& m,
                              json provenance = json::object()) {
    json doc;
    doc["k"] = m.k();
    doc["g"] = matrix_to_json(m.tensor());
    doc["provenance"] = std::move(provenance);
    auto out = open_output(path);
    out << doc.dump(2) << '\n';
}

inline json parse_json_file(const std::string& path) {
    auto in = open_input(path);
    try {
        return json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline Metric read_metric_json(const std::string& path, json* provenance = nullptr) {
    const json doc = parse_json_file(path);
    try {
        const auto k = doc.at("k").get<Index>();
        MatrixX<double> g = matrix_from_json(doc.at("g"), path);
        if (g.rows() != k)
            throw ValidationError(path + ": g has " + std::to_string(g.rows()) +
                                  " rows but k = " + std::to_string(k));
        if (provenance && doc.contains("provenance")) *provenance = doc.at("provenance");
        return Metric::from_matrix_tolerant(std::move(g));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

/// Reads a metric from either format, keyed on the file extension.
inline Metric read_metric_any(const std::string& path) {
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
        return read_metric_json(path);
    return read_metric_csv(path);
}

// ---------------------------------------------------------------------------
// Confusion counts: CSV of non-negative integers, rows = true class.
// ---------------------------------------------------------------------------

inline void write_count_matrix_csv(const std::string& path, const CountMatrix& counts) {
    auto out = open_output(path);
    for (Index r = 0; r < counts.rows(); ++r) {
        for (Index c = 0; c < counts.cols(); ++c) {
            if (c > 0) out << ',';
            out << counts(r, c);
        }
        out << '\n';
    }
}

inline CountMatrix read_confusion_csv(const std::string& path) {
    auto in = open_input(path);
    std::vector<std::vector<std::int64_t>> rows;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        std::vector<std::int64_t> row;
        for (const auto& f : fields) {
            const long long v = parse_int_field(f, path, line_no);
            if (v < 0) throw ParseError(path, line_no, "negative count");
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(path, line_no, "ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");
    if (rows.size() != rows.front().size())
        throw ValidationError(path + ": confusion matrix must be square, got " +
                              std::to_string(rows.size()) + "x" +
                              std::to_string(rows.front().size()));
    const Index k = static_cast<Index>(rows.size());
    CountMatrix counts(k, k);
    for (Index r = 0; r < k; ++r)
        for (Index c = 0; c < k; ++c)
            counts(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return counts;
}

// ---------------------------------------------------------------------------
// EMA state checkpoint: JSON {k, lambda, t, pbar}.
// ---------------------------------------------------------------------------

inline json ema_to_json(const EmaState& state) {
    json doc;
    doc["k"] = state.k();
    doc["lambda"] = state.lambda();
    doc["t"] = state.t();
    doc["pbar"] = matrix_to_json(state.pbar());
    return doc;
}

inline void write_ema_json(const std::string& path, const EmaState& state) {
    auto out = open_output(path);
    out << ema_to_json(state).dump(2) << '\n';
}

inline EmaState ema_from_json(const json& doc, const std::string& what) {
    try {
        return EmaState::from_parts(doc.at("k").get<Index>(), doc.at("lambda").get<double>(),
                                    doc.at("t").get<std::int64_t>(),
                                    matrix_from_json(doc.at("pbar"), what));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(what + ": " + e.what());
    }
}

inline EmaState read_ema_json(const std::string& path) {
    return ema_from_json(parse_json_file(path), path);
}

// ---------------------------------------------------------------------------
// Network checkpoint: JSON {layer_dims, weights, biases, seed, epoch}.
// ---------------------------------------------------------------------------

inline json vector_to_json(const VectorX<double>& v) {
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

inline VectorX<double> vector_from_json(const json& arr, const std::string& what) {
    if (!arr.is_array()) throw ValidationError(what + ": expected an array");
    VectorX<double> v(static_cast<Index>(arr.size()));
    for (Index i = 0; i < v.size(); ++i) v(i) = arr.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

inline json network_to_json(const Network& net, std::uint64_t seed, std::int64_t epoch) {
    json doc;
    doc["layer_dims"] = net.layer_dims;
    json weights = json::array();
    for (const auto& w : net.weights) weights.push_back(matrix_to_json(w));
    doc["weights"] = std::move(weights);
    json biases = json::array();
    for (const auto& b : net.biases) biases.push_back(vector_to_json(b));
    doc["biases"] = std::move(biases);
    doc["seed"] = seed;
    doc["epoch"] = epoch;
    return doc;
}

inline void write_network_json(const std::string& path, const Network& net, std::uint64_t seed,
                               std::int64_t epoch) {
    auto out = open_output(path);
    out << network_to_json(net, seed, epoch).dump(2) << '\n';
}

struct LoadedNetwork {
    Network net;
    std::uint64_t seed = 0;
    std::int64_t epoch = 0;
};

inline LoadedNetwork network_from_json(const json& doc, const std::string& what) {
    try {
        LoadedNetwork loaded;
        loaded.net.layer_dims = doc.at("layer_dims").get<std::vector<Index>>();
        for (const auto& w : doc.at("weights"))
            loaded.net.weights.push_back(matrix_from_json(w, what));
        for (const auto& b : doc.at("biases"))
            loaded.net.biases.push_back(vector_from_json(b, what));
        loaded.seed = doc.at("seed").get<std::uint64_t>();
        loaded.epoch = doc.at("epoch").get<std::int64_t>();
        loaded.net.validate();
        return loaded;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(what + ": " + e.what());
    }
}

inline LoadedNetwork read_network_json(const std::string& path) {
    return network_from_json(parse_json_file(path), path);
}

}  // namespace curved::io
