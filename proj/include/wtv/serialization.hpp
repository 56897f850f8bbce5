#pragma once

#include <json.hpp>

#include <filesystem>

#include "wtv/bounds.hpp"
#include "wtv/distributions.hpp"
#include "wtv/harness.hpp"
#include "wtv/spectral.hpp"
#include "wtv/transport.hpp"

namespace wtv {

using json = nlohmann::json;

// Every *_from_json throws PreconditionError on malformed or invalid documents.

json to_json(const GaussianMixture& dist);
GaussianMixture mixture_from_json(const json& j);

json to_json(const AtomSet& atoms);
AtomSet atoms_from_json(const json& j);

json to_json(const DistanceResult& r);
DistanceResult distance_from_json(const json& j);

json to_json(const PolyEnvelopeTable& t);
PolyEnvelopeTable poly_table_from_json(const json& j);

json to_json(const ExpEnvelopeTable& t);
ExpEnvelopeTable exp_table_from_json(const json& j);

json to_json(const BoundParams& p);
BoundParams params_from_json(const json& j);

json to_json(const BoundCertificate& c);

json to_json(const Scenario& sc);
Scenario scenario_from_json(const json& j);

json to_json(const SweepReport& r);
SweepReport report_from_json(const json& j);

/// Reads and parses a JSON file; throws PreconditionError if it cannot be read or parsed.
json read_json_file(const std::filesystem::path& path);

}  // namespace wtv
