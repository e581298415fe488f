#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "collab/error.hpp"
#include "collab/network.hpp"

namespace collab {

using json = nlohmann::json;

namespace detail {

inline std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

template <class T>
T field_or(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  return it->get<T>();
}

}  // namespace detail

inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, detail::line_context(text, e.byte) + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline NetworkSpec network_from_json(const json& doc) {
  try {
    NetworkSpec spec;
    spec.num_resources = doc.at("num_resources").get<int>();
    for (const auto& jt_doc : doc.at("job_types")) {
      JobType jt;
      jt.arrival_rate = jt_doc.at("arrival_rate").get<double>();
      jt.service_rate = jt_doc.at("service_rate").get<double>();
      jt.holding_cost = detail::field_or(jt_doc, "holding_cost", 1.0);
      auto dist = [&](const char* key) {
        const auto name = detail::field_or<std::string>(jt_doc, key, "exponential");
        auto kind = parse_dist_kind(name);
        if (!kind) throw Error(ErrorCode::ParseError, std::string("unknown distribution '") + name + "'");
        return *kind;
      };
      jt.arrival_dist = dist("arrival_dist");
      jt.service_dist = dist("service_dist");
      auto default_cv = [](DistKind k) { return k == DistKind::deterministic ? 0.0 : 1.0; };
      jt.arrival_cv = detail::field_or(jt_doc, "arrival_cv", default_cv(jt.arrival_dist));
      jt.service_cv = detail::field_or(jt_doc, "service_cv", default_cv(jt.service_dist));
      jt.resources = jt_doc.at("resources").get<std::vector<int>>();
      std::sort(jt.resources.begin(), jt.resources.end());
      jt.resources.erase(std::unique(jt.resources.begin(), jt.resources.end()), jt.resources.end());
      spec.job_types.push_back(std::move(jt));
    }
    if (doc.contains("heavy_set") && !doc["heavy_set"].is_null())
      spec.heavy_set = doc["heavy_set"].get<std::vector<int>>();
    spec.heavy_threshold = detail::field_or(doc, "heavy_threshold", 0.9);
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("network document: ") + e.what());
  }
}

inline NetworkSpec parse_network(const std::string& text) {
  return network_from_json(parse_json_text(text));
}

inline NetworkSpec load_network(const std::string& path) { return parse_network(read_file(path)); }

inline json to_json(const NetworkSpec& spec) {
  json doc;
  doc["num_resources"] = spec.num_resources;
  doc["job_types"] = json::array();
  for (const auto& jt : spec.job_types) {
    doc["job_types"].push_back({
        {"arrival_rate", jt.arrival_rate},
        {"service_rate", jt.service_rate},
        {"holding_cost", jt.holding_cost},
        {"arrival_cv", jt.arrival_cv},
        {"service_cv", jt.service_cv},
        {"arrival_dist", to_string(jt.arrival_dist)},
        {"service_dist", to_string(jt.service_dist)},
        {"resources", jt.resources},
    });
  }
  if (spec.heavy_set) doc["heavy_set"] = *spec.heavy_set;
  doc["heavy_threshold"] = spec.heavy_threshold;
  return doc;
}

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::NoJobTypes: return "no_job_types";
    case ViolationKind::BadResourceCount: return "bad_resource_count";
    case ViolationKind::ResourceIndexOutOfRange: return "resource_index_out_of_range";
    case ViolationKind::JobTypeWithoutResource: return "job_type_has_no_resource";
    case ViolationKind::ResourceWithoutJobType: return "resource_has_no_job_type";
    case ViolationKind::NestedResourcePair: return "nested_resource_pair";
    case ViolationKind::NonPositiveServiceRate: return "non_positive_service_rate";
    case ViolationKind::NegativeArrivalRate: return "negative_arrival_rate";
    case ViolationKind::ZeroArrivalRate: return "zero_arrival_rate";
    case ViolationKind::NonPositiveHoldingCost: return "non_positive_holding_cost";
    case ViolationKind::NegativeCv: return "negative_cv";
    case ViolationKind::DistributionCvMismatch: return "distribution_cv_mismatch";
    case ViolationKind::HeavySetOutOfRange: return "heavy_set_out_of_range";
    case ViolationKind::EmptyHeavySet: return "empty_heavy_set";
    case ViolationKind::Disconnected: return "disconnected";
  }
  return "unknown";
}

inline json to_json(const std::vector<Violation>& vs) {
  json arr = json::array();
  for (const auto& v : vs)
    arr.push_back({{"kind", to_string(v.kind)},
                   {"severity", v.severity == Severity::error ? "error" : "warning"},
                   {"indices", v.indices},
                   {"message", v.message}});
  return arr;
}

inline json to_json(const ArchitectureReport& r) {
  json levels = json::array();
  for (const auto& l : r.levels) levels.push_back({{"num_resources", l.num_resources}, {"job_types", l.job_types}});
  return {
      {"is_hierarchical", r.is_hierarchical},
      {"is_connected", r.is_connected},
      {"levels", levels},
      {"resources_of", r.resources_of},
      {"jobs_of", r.jobs_of},
      {"heavy_resources", r.heavy_resources},
      {"light_resources", r.light_resources},
      {"heavy_job_types", r.heavy_job_types},
      {"light_job_types", r.light_job_types},
      {"mixed_job_types", r.mixed_job_types},
      {"loads", r.loads},
  };
}

}  // namespace collab
