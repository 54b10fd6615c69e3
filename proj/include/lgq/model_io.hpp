#pragma once

#include "lgq/model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace lgq {

/// A system model together with its named unravellings, as stored in a model file.
struct ModelFile {
    SystemModel model;
    std::map<std::string, Unravelling> unravellings;
    nlohmann::json source;  ///< canonical JSON the model was built from
};

/**
 * Parses
 *   {"N": 1, "hbar": 1, "A": [[...]], "D": [[...]],
 *    "unravellings": {"name": {"type": "homodyne" | "heterodyne" | "explicit",
 *                              "eta": ..., "theta": ..., "mode": 0,
 *                              "C": [[...]], "Gamma": [[...]]}}}
 * Angles are radians, matrices row-major. "hbar" defaults to 1 and "mode" to 0.
 * Throws DomainError with a description of the offending field.
 */
ModelFile parse_model(const nlohmann::json& doc);

ModelFile load_model(const std::filesystem::path& path);

Matrix matrix_from_json(const nlohmann::json& j, const std::string& what);
nlohmann::json matrix_to_json(const Matrix& m);

/// Builds one unravelling from its JSON description.
Unravelling parse_unravelling(const nlohmann::json& j, const SystemModel& model, const std::string& name);

/// Angle literal: a number, or an expression like "pi", "-pi/8", "3pi/8", "3*pi/8".
double parse_angle(const std::string& text);

/// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string content_hash(const nlohmann::json& doc);

}  // namespace lgq
