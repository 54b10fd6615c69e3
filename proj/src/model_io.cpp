#include "lgq/model_io.hpp"

#include "lgq/errors.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <regex>

namespace lgq {

namespace {

double number_field(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) {
        throw DomainError(where + ": missing field '" + key + "'");
    }
    const auto& v = j.at(key);
    if (v.is_number()) {
        return v.get<double>();
    }
    if (v.is_string() && std::string(key) == "theta") {
        return parse_angle(v.get<std::string>());
    }
    throw DomainError(where + ": field '" + key + "' must be a number");
}

}  // namespace

Matrix matrix_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) {
        throw DomainError(what + " must be a non-empty array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j.front().is_array()) {
        throw DomainError(what + " must be an array of rows");
    }
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw DomainError(what + ": row " + std::to_string(r) + " has the wrong length");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& x = row.at(static_cast<std::size_t>(c));
            if (!x.is_number()) {
                throw DomainError(what + ": entry (" + std::to_string(r) + ", " + std::to_string(c) +
                                  ") is not a number");
            }
            m(r, c) = x.get<double>();
        }
    }
    return m;
}

nlohmann::json matrix_to_json(const Matrix& m) {
    auto out = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        out.push_back(std::move(row));
    }
    return out;
}

double parse_angle(const std::string& text) {
    static const std::regex pi_expr(R"(^\s*([+-]?)\s*(\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$)");
    std::smatch m;
    if (std::regex_match(text, m, pi_expr)) {
        const double sign = m[1] == "-" ? -1.0 : 1.0;
        const double factor = m[2].length() > 0 ? std::stod(m[2]) : 1.0;
        const double divisor = m[3].matched ? std::stod(m[3]) : 1.0;
        if (divisor == 0.0) {
            throw DomainError("angle '" + text + "' divides by zero");
        }
        return sign * factor * std::numbers::pi / divisor;
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        throw DomainError("cannot parse angle '" + text + "'");
    }
    if (used != text.size()) {
        throw DomainError("cannot parse angle '" + text + "'");
    }
    return value;
}

Unravelling parse_unravelling(const nlohmann::json& j, const SystemModel& model, const std::string& name) {
    const std::string where = "unravelling '" + name + "'";
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
        throw DomainError(where + ": needs a string 'type'");
    }
    const auto type = j.at("type").get<std::string>();
    const int mode = j.contains("mode") ? j.at("mode").get<int>() : 0;
    if (type == "homodyne") {
        return make_homodyne(number_field(j, "eta", where), number_field(j, "theta", where), mode, model);
    }
    if (type == "heterodyne") {
        const double theta = j.contains("theta") ? number_field(j, "theta", where) : 0.0;
        return make_heterodyne(number_field(j, "eta", where), theta, mode, model);
    }
    if (type == "explicit") {
        if (!j.contains("C") || !j.contains("Gamma")) {
            throw DomainError(where + ": explicit unravelling needs 'C' and 'Gamma'");
        }
        Unravelling u(matrix_from_json(j.at("C"), where + ".C"), matrix_from_json(j.at("Gamma"), where + ".Gamma"));
        if (u.dim() != model.dim()) {
            throw DomainError(where + ": matrices must have " + std::to_string(model.dim()) + " columns");
        }
        return u;
    }
    throw DomainError(where + ": unknown type '" + type + "'");
}

ModelFile parse_model(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw DomainError("model document must be a JSON object");
    }
    if (!doc.contains("N") || !doc.at("N").is_number_integer()) {
        throw DomainError("model: 'N' must be an integer");
    }
    if (!doc.contains("A") || !doc.contains("D")) {
        throw DomainError("model: 'A' and 'D' are required");
    }
    const int modes = doc.at("N").get<int>();
    const double hbar = doc.contains("hbar") ? number_field(doc, "hbar", "model") : 1.0;
    SystemModel model(modes, hbar, matrix_from_json(doc.at("A"), "A"), matrix_from_json(doc.at("D"), "D"));

    std::map<std::string, Unravelling> unravellings;
    if (doc.contains("unravellings")) {
        const auto& us = doc.at("unravellings");
        if (!us.is_object()) {
            throw DomainError("model: 'unravellings' must be an object");
        }
        for (const auto& [name, spec] : us.items()) {
            unravellings.emplace(name, parse_unravelling(spec, model, name));
        }
    }
    return {std::move(model), std::move(unravellings), doc};
}

ModelFile load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DomainError("cannot open model file '" + path.string() + "'");
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw DomainError("model file '" + path.string() + "': " + e.what());
    }
    try {
        return parse_model(doc);
    } catch (const nlohmann::json::exception& e) {
        throw DomainError("model file '" + path.string() + "': " + e.what());
    }
}

std::string content_hash(const nlohmann::json& doc) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : doc.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace lgq
