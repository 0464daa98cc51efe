#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace emotionpush::ensemble {

// Fine and coarse label sets plus the total fine -> coarse compaction map.
class Taxonomy {
 public:
  Taxonomy() = default;
  // Throws InvalidArgument unless both lists are non-empty and duplicate-free,
  // compaction covers every fine label with a known coarse label, and every
  // coarse label has at least one fine preimage.
  Taxonomy(std::string name, std::vector<std::string> fine, std::vector<std::string> coarse,
           std::map<std::string, std::string> compaction);

  // Identity taxonomy: every label is its own coarse label.
  static Taxonomy flat(std::string name, std::vector<std::string> labels);

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& fine_labels() const noexcept { return fine_; }
  const std::vector<std::string>& coarse_labels() const noexcept { return coarse_; }
  const std::map<std::string, std::string>& compaction() const noexcept { return compaction_; }

  bool has_fine(std::string_view label) const;
  bool has_coarse(std::string_view label) const;

  // Throws NotFound for labels outside the taxonomy.
  const std::string& compact(std::string_view fine) const;

  friend bool operator==(const Taxonomy&, const Taxonomy&) = default;

 private:
  std::string name_;
  std::vector<std::string> fine_;
  std::vector<std::string> coarse_;
  std::map<std::string, std::string> compaction_;
};

// Coarse label -> "#RRGGBB".
class ColorMap {
 public:
  ColorMap() = default;
  // Throws InvalidArgument if the map is not total over `coarse`, a color is
  // not #RRGGBB, or two labels share a color.
  ColorMap(std::map<std::string, std::string> colors, const std::vector<std::string>& coarse);

  const std::string& color_of(std::string_view coarse) const;
  const std::map<std::string, std::string>& colors() const noexcept { return colors_; }

  friend bool operator==(const ColorMap&, const ColorMap&) = default;

 private:
  std::map<std::string, std::string> colors_;
};

struct TaxonomyConfig {
  Taxonomy taxonomy;
  ColorMap colors;
  std::vector<std::string> fixed_assignments;  // fine labels whose group is not editorial

  friend bool operator==(const TaxonomyConfig&, const TaxonomyConfig&) = default;
};

// Config document: {"coarse": [...], "colors": {...}, "compaction": {...}}
// with optional "name", "fine" (fine label order; defaults to compaction key
// order) and "fixed_assignments".
TaxonomyConfig parse_taxonomy_config(std::string_view json_text);
TaxonomyConfig taxonomy_config_from_json(const nlohmann::ordered_json& doc);
TaxonomyConfig load_taxonomy_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const TaxonomyConfig& config);

// The shipped 40 -> 7 configuration.
const TaxonomyConfig& default_taxonomy_config();
std::string_view default_taxonomy_json();

// Config for a flat label set with generated distinct colors.
TaxonomyConfig flat_taxonomy_config(std::string name, std::vector<std::string> labels);

std::string compact_label(const Taxonomy& taxonomy, std::string_view fine);
std::string color_of(const ColorMap& colors, std::string_view coarse);

}  // namespace emotionpush::ensemble
