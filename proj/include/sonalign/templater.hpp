#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sonalign::tpl {

// `{{ name }}` slots accept any parameter; `{% name %}` slots are restricted
// to numeric interval parameters.
enum class SlotKind { kAny, kNumeric };

struct Slot {
  size_t begin = 0;  // byte offsets of the full delimiter span
  size_t end = 0;
  std::string name;
  SlotKind kind = SlotKind::kAny;
};

struct Template {
  std::string name;
  std::string body;
  std::vector<Slot> slots;                    // in order of appearance
  std::vector<std::string> placeholders;      // unique names, first-appearance order
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Sampling domains: categorical string lists and real intervals. A lookup for
// `name` falls back to `name_range`, so `{{ attack }}` finds `attack_range`.
struct ParamSpace {
  std::map<std::string, std::vector<std::string>> lists;
  std::map<std::string, Interval> intervals;

  const std::vector<std::string>* find_list(const std::string& name) const;
  const Interval* find_interval(const std::string& name) const;
};

// Purely lexical scan for placeholder spans; no evaluation. Throws ParseError
// with the byte offset on unbalanced delimiters or empty identifiers.
Template parse_template(const std::string& name, const std::string& body);

// The built-in sampling domains; a subset vocabulary covering samples, synths,
// scale characters, effects, the chromatic notes C2..C6, and float intervals.
ParamSpace default_param_space();

// `key = value` file; values with `..` are intervals, otherwise comma lists.
ParamSpace load_param_space(const std::string& path);

using Bindings = std::map<std::string, std::string>;

// Uniform draws per identifier: categorical values verbatim, interval values
// formatted with 2 decimal places. Deterministic per seed; draw order follows
// `needed`.
Bindings sample_params(const ParamSpace& space, const std::vector<std::string>& needed,
                       uint64_t seed);

// As above, driven by a template's placeholder list; numeric slots must
// resolve to intervals.
Bindings sample_template_params(const ParamSpace& space, const Template& tpl, uint64_t seed);

struct RenderedProgram {
  std::string template_name;
  uint64_t seed = 0;
  Bindings bindings;
  std::string text;
  std::string file_name;  // carries the .pi extension
};

// Pure textual substitution; bindings must cover every placeholder.
RenderedProgram render(const Template& tpl, const Bindings& bindings);

// Loads every *.pi.tpl file in a directory, sorted by name.
std::vector<Template> load_templates(const std::string& dir);

struct ManifestEntry {
  std::string file_name;
  std::string template_name;
  uint64_t seed = 0;
  Bindings bindings;
};

// Renders per_template variants of every template with independently derived
// seeds, writes `<template>__<variant>.pi` files plus `manifest.jsonl` under
// out_dir, and returns the manifest.
std::vector<ManifestEntry> generate_corpus(const std::vector<Template>& templates,
                                           const ParamSpace& space, int per_template,
                                           uint64_t seed, const std::string& out_dir);

std::vector<ManifestEntry> load_manifest(const std::string& path);

}  // namespace sonalign::tpl
