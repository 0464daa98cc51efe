#include "emotionpush/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "emotionpush/error.hpp"

namespace emotionpush::ensemble {
namespace detail {
extern const std::string_view kDefaultTaxonomyJson;
}  // namespace detail

namespace {

void require_unique(const std::vector<std::string>& labels, const char* what) {
  if (labels.empty()) {
    throw InvalidArgument(std::string("taxonomy: ") + what + " label list is empty");
  }
  std::set<std::string> seen;
  for (const auto& label : labels) {
    if (label.empty()) {
      throw InvalidArgument(std::string("taxonomy: empty ") + what + " label");
    }
    if (!seen.insert(label).second) {
      throw InvalidArgument(std::string("taxonomy: duplicate ") + what + " label '" + label + "'");
    }
  }
}

bool is_hex_color(std::string_view color) {
  return color.size() == 7 && color[0] == '#' &&
         std::all_of(color.begin() + 1, color.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

std::string hsv_hex(double hue, double sat, double val) {
  const double c = val * sat;
  const double h = std::fmod(hue, 360.0) / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = val - c;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02X%02X%02X", static_cast<int>(std::lround((r + m) * 255)),
                static_cast<int>(std::lround((g + m) * 255)), static_cast<int>(std::lround((b + m) * 255)));
  return buf;
}

}  // namespace

Taxonomy::Taxonomy(std::string name, std::vector<std::string> fine, std::vector<std::string> coarse,
                   std::map<std::string, std::string> compaction)
    : name_(std::move(name)), fine_(std::move(fine)), coarse_(std::move(coarse)), compaction_(std::move(compaction)) {
  require_unique(fine_, "fine");
  require_unique(coarse_, "coarse");
  const std::set<std::string> coarse_set(coarse_.begin(), coarse_.end());
  std::set<std::string> covered;
  for (const auto& label : fine_) {
    auto it = compaction_.find(label);
    if (it == compaction_.end()) {
      throw InvalidArgument("taxonomy: fine label '" + label + "' has no compaction entry");
    }
    if (!coarse_set.contains(it->second)) {
      throw InvalidArgument("taxonomy: '" + label + "' compacts to unknown coarse label '" + it->second + "'");
    }
    covered.insert(it->second);
  }
  if (compaction_.size() != fine_.size()) {
    throw InvalidArgument("taxonomy: compaction map has entries for labels outside the fine label list");
  }
  for (const auto& label : coarse_) {
    if (!covered.contains(label)) {
      throw InvalidArgument("taxonomy: coarse label '" + label + "' has no fine label mapped to it");
    }
  }
}

Taxonomy Taxonomy::flat(std::string name, std::vector<std::string> labels) {
  std::map<std::string, std::string> identity;
  for (const auto& label : labels) identity[label] = label;
  auto coarse = labels;
  return Taxonomy(std::move(name), std::move(labels), std::move(coarse), std::move(identity));
}

bool Taxonomy::has_fine(std::string_view label) const {
  return std::find(fine_.begin(), fine_.end(), label) != fine_.end();
}

bool Taxonomy::has_coarse(std::string_view label) const {
  return std::find(coarse_.begin(), coarse_.end(), label) != coarse_.end();
}

const std::string& Taxonomy::compact(std::string_view fine) const {
  auto it = compaction_.find(std::string(fine));
  if (it == compaction_.end()) {
    throw NotFound("unknown fine label '" + std::string(fine) + "'");
  }
  return it->second;
}

ColorMap::ColorMap(std::map<std::string, std::string> colors, const std::vector<std::string>& coarse)
    : colors_(std::move(colors)) {
  std::set<std::string> seen;
  for (const auto& label : coarse) {
    auto it = colors_.find(label);
    if (it == colors_.end()) {
      throw InvalidArgument("color map: no color for coarse label '" + label + "'");
    }
    if (!is_hex_color(it->second)) {
      throw InvalidArgument("color map: '" + it->second + "' for '" + label + "' is not #RRGGBB");
    }
    std::string upper = it->second;
    std::transform(upper.begin(), upper.end(), upper.begin(), [](char c) { return std::toupper(static_cast<unsigned char>(c)); });
    if (!seen.insert(upper).second) {
      throw InvalidArgument("color map: color " + it->second + " is used by more than one label");
    }
  }
  if (colors_.size() != coarse.size()) {
    throw InvalidArgument("color map: colors given for labels outside the coarse label list");
  }
}

const std::string& ColorMap::color_of(std::string_view coarse) const {
  auto it = colors_.find(std::string(coarse));
  if (it == colors_.end()) {
    throw NotFound("no color for label '" + std::string(coarse) + "'");
  }
  return it->second;
}

TaxonomyConfig taxonomy_config_from_json(const nlohmann::ordered_json& doc) {
  try {
    if (!doc.is_object()) {
      throw ParseError("taxonomy config: expected a JSON object");
    }
    for (const char* key : {"coarse", "colors", "compaction"}) {
      if (!doc.contains(key)) {
        throw ParseError(std::string("taxonomy config: missing field '") + key + "'");
      }
    }
    auto coarse = doc.at("coarse").get<std::vector<std::string>>();
    std::map<std::string, std::string> compaction;
    std::vector<std::string> fine;
    for (const auto& [fine_label, coarse_label] : doc.at("compaction").items()) {
      compaction[fine_label] = coarse_label.get<std::string>();
      fine.push_back(fine_label);
    }
    if (doc.contains("fine")) {
      fine = doc.at("fine").get<std::vector<std::string>>();
    }
    std::map<std::string, std::string> colors;
    for (const auto& [label, color] : doc.at("colors").items()) {
      colors[label] = color.get<std::string>();
    }
    TaxonomyConfig config;
    config.taxonomy = Taxonomy(doc.value("name", std::string("custom")), std::move(fine), coarse, std::move(compaction));
    config.colors = ColorMap(std::move(colors), config.taxonomy.coarse_labels());
    if (doc.contains("fixed_assignments")) {
      config.fixed_assignments = doc.at("fixed_assignments").get<std::vector<std::string>>();
      for (const auto& label : config.fixed_assignments) {
        if (!config.taxonomy.has_fine(label)) {
          throw InvalidArgument("taxonomy config: fixed assignment for unknown label '" + label + "'");
        }
      }
    }
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("taxonomy config: ") + e.what());
  }
}

TaxonomyConfig parse_taxonomy_config(std::string_view json_text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("taxonomy config: ") + e.what());
  }
  return taxonomy_config_from_json(doc);
}

TaxonomyConfig load_taxonomy_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open taxonomy config " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_taxonomy_config(text.str());
}

nlohmann::ordered_json to_json(const TaxonomyConfig& config) {
  nlohmann::ordered_json doc;
  const auto& tax = config.taxonomy;
  doc["name"] = tax.name();
  doc["coarse"] = tax.coarse_labels();
  nlohmann::ordered_json colors = nlohmann::ordered_json::object();
  for (const auto& label : tax.coarse_labels()) colors[label] = config.colors.color_of(label);
  doc["colors"] = std::move(colors);
  doc["fine"] = tax.fine_labels();
  nlohmann::ordered_json compaction = nlohmann::ordered_json::object();
  for (const auto& label : tax.fine_labels()) compaction[label] = tax.compact(label);
  doc["compaction"] = std::move(compaction);
  if (!config.fixed_assignments.empty()) doc["fixed_assignments"] = config.fixed_assignments;
  return doc;
}

std::string_view default_taxonomy_json() { return detail::kDefaultTaxonomyJson; }

const TaxonomyConfig& default_taxonomy_config() {
  static const TaxonomyConfig config = parse_taxonomy_config(detail::kDefaultTaxonomyJson);
  return config;
}

TaxonomyConfig flat_taxonomy_config(std::string name, std::vector<std::string> labels) {
  TaxonomyConfig config;
  config.taxonomy = Taxonomy::flat(std::move(name), std::move(labels));
  std::map<std::string, std::string> colors;
  const auto& coarse = config.taxonomy.coarse_labels();
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    // Golden-angle hue steps with a slowly varying value keep colors distinct.
    const double hue = std::fmod(static_cast<double>(i) * 137.50776405, 360.0);
    const double val = 0.95 - 0.5 * static_cast<double>(i % 64) / 64.0;
    colors[coarse[i]] = hsv_hex(hue, 0.8, val);
  }
  config.colors = ColorMap(std::move(colors), coarse);
  return config;
}

std::string compact_label(const Taxonomy& taxonomy, std::string_view fine) { return taxonomy.compact(fine); }

std::string color_of(const ColorMap& colors, std::string_view coarse) { return colors.color_of(coarse); }

}  // namespace emotionpush::ensemble
