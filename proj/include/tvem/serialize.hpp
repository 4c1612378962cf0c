#ifndef TVEM_SERIALIZE_HPP
#define TVEM_SERIALIZE_HPP

#include <json.hpp>
#include <memory>
#include <string>

#include "tvem/trainer.hpp"

namespace tvem {

using json = nlohmann::json;

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

std::string strategy_name(EStepStrategy s);
EStepStrategy strategy_from_name(const std::string& name);

// Parameter document: model kind, dimensions, parameter arrays in row-major
// order, floors, and the RNG seed used to produce them.
json params_to_json(const GenerativeModel& model, std::uint64_t seed);
std::unique_ptr<GenerativeModel> model_from_json(const json& doc);

json trainer_config_to_json(const TrainerConfig& cfg);
TrainerConfig trainer_config_from_json(const json& doc);

json collection_to_json(const VariationalCollection& K);
VariationalCollection collection_from_json(const json& doc, int S,
                                           const StateSpace& space);

json checkpoint_to_json(const Trainer& trainer);
Trainer trainer_from_checkpoint(const json& doc, const DataSet& data);

std::string dump_json(const json& doc);
json parse_json(const std::string& text, const std::string& what);

}  // namespace tvem

#endif
