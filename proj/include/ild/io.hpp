#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ild/canonical.hpp"
#include "ild/datagen.hpp"
#include "ild/model.hpp"
#include "ild/train.hpp"

namespace ild::io {

using nlohmann::json;

json to_json(const AffineSCM& scm);
AffineSCM scm_from_json(const json& j);

json to_json(const LayerChain& chain);
LayerChain chain_from_json(const json& j);

json to_json(const ILDModel& model);
ILDModel model_from_json(const json& j);

json to_json(const GroundTruthSpec& spec);
GroundTruthSpec spec_from_json(const json& j);

json to_json(const TrainConfig& config);
/// Missing keys keep their defaults.
TrainConfig train_config_from_json(const json& j);

json to_json(const ModelVariant& variant);
ModelVariant variant_from_json(const json& j);

json to_json(const InterventionSet& set);
json to_json(const CanonicalizationReport& report);
json to_json(const AdamState& state);

/// Header `d,x1,...,xm`, one row per sample, shortest round-trip decimals.
std::string samples_to_csv(std::span<const DomainSample> samples, int dim);
Samples samples_from_csv(std::string_view text);

std::string history_to_csv(std::span<const HistoryRecord> history);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

}  // namespace ild::io
