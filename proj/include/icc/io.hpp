#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "icc/deform.hpp"

namespace icc {

using Json = nlohmann::json;

inline constexpr int kDocumentVersion = 1;

/// Cage document: a JSON array of [x, y] pairs, counterclockwise, first vertex not repeated.
CagePolygon cage_from_json(const Json& j);
Json cage_to_json(const CagePolygon& cage);

/// Grid document with run-length-encoded vertex classes ([[class, count], ...] with 0 outside,
/// 1 ring, 2 inside) and the cage the grid was rasterized from, if any.
Json domain_to_json(const GridDomain& d);
GridDomain domain_from_json(const Json& j);

/// Field document: the embedded grid document, method, epsilon, maximum, per-vertex values
/// (null on outside vertices) and the cousin tree edges as [parent, child] vertex indices.
Json field_to_json(const ScalarField& f);
ScalarField field_from_json(const Json& j);

Json critical_report_to_json(const CriticalPointReport& r, const GridDomain& d);
Json tree_audit_to_json(const CousinTreeAudit& a);
Json jacobian_to_json(const JacobianReport& r, bool with_determinants = false);
Json curve_to_json(const IntegralCurve& c);
Json icc_to_json(const IntegralCurveCoordinate& c);
IntegralCurveCoordinate icc_from_json(const Json& j);
Json edges_to_json(std::span<const GridEdge> edges);

/// Reads and parses a JSON file; throws ParseError on I/O or syntax errors.
Json read_json_file(const std::filesystem::path& path);
/// Writes `j` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace icc
