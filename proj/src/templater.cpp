#include "sonalign/templater.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sonalign/config.hpp"
#include "sonalign/errors.hpp"
#include "sonalign/rng.hpp"

namespace sonalign::tpl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Delims {
  const char* open;
  const char* close;
  SlotKind kind;
};

constexpr Delims kDelims[] = {
    {"{{", "}}", SlotKind::kAny},
    {"{%", "%}", SlotKind::kNumeric},
};

std::string offset_msg(const std::string& name, const char* what, size_t offset) {
  return "template '" + name + "': " + what + " at byte offset " + std::to_string(offset);
}

}  // namespace

const std::vector<std::string>* ParamSpace::find_list(const std::string& name) const {
  auto it = lists.find(name);
  if (it == lists.end()) it = lists.find(name + "_range");
  return it == lists.end() ? nullptr : &it->second;
}

const Interval* ParamSpace::find_interval(const std::string& name) const {
  auto it = intervals.find(name);
  if (it == intervals.end()) it = intervals.find(name + "_range");
  return it == intervals.end() ? nullptr : &it->second;
}

Template parse_template(const std::string& name, const std::string& body) {
  if (body.empty()) throw ParseError("template '" + name + "': empty body");

  Template tpl;
  tpl.name = name;
  tpl.body = body;

  size_t pos = 0;
  std::set<std::string> seen;
  while (pos < body.size()) {
    size_t next = std::string::npos;
    const Delims* delims = nullptr;
    for (const Delims& d : kDelims) {
      const size_t found = body.find(d.open, pos);
      if (found < next) {
        next = found;
        delims = &d;
      }
    }
    // a bare closer before any opener is unbalanced
    for (const Delims& d : kDelims) {
      const size_t stray = body.find(d.close, pos);
      if (stray < next) {
        throw ParseError(offset_msg(name, "unbalanced closing delimiter", stray));
      }
    }
    if (next == std::string::npos) break;

    const size_t close = body.find(delims->close, next + 2);
    if (close == std::string::npos) {
      throw ParseError(offset_msg(name, "unterminated placeholder", next));
    }
    const std::string ident = cfg::trim(body.substr(next + 2, close - next - 2));
    if (ident.empty()) {
      throw ParseError(offset_msg(name, "empty placeholder identifier", next));
    }
    if (ident.find('{') != std::string::npos || ident.find('}') != std::string::npos) {
      throw ParseError(offset_msg(name, "nested delimiter inside placeholder", next));
    }
    Slot slot;
    slot.begin = next;
    slot.end = close + 2;
    slot.name = ident;
    slot.kind = delims->kind;
    tpl.slots.push_back(slot);
    if (seen.insert(ident).second) tpl.placeholders.push_back(ident);
    pos = close + 2;
  }
  return tpl;
}

ParamSpace default_param_space() {
  ParamSpace space;
  space.lists["samples"] = {"ambi_choir", "bass_voxy_c", "loop_amen",
                            "drum_heavy_kick", "elec_blup", "perc_bell"};
  space.lists["synths"] = {"beep", "saw", "prophet", "tb303", "dsaw", "fm"};
  space.lists["character"] = {"major", "minor", "major_pentatonic",
                              "minor_pentatonic", "dorian", "mixolydian"};
  space.lists["effects"] = {"echo", "compressor", "reverb", "distortion", "slicer", "wobble"};
  // chromatic notes C2 .. C6, flats
  static const char* kNames[12] = {"C", "Db", "D", "Eb", "E", "F",
                                   "Gb", "G", "Ab", "A", "Bb", "B"};
  std::vector<std::string> notes;
  for (int octave = 2; octave <= 5; ++octave) {
    for (const char* n : kNames) notes.push_back(std::string(n) + std::to_string(octave));
  }
  notes.push_back("C6");
  space.lists["notes"] = std::move(notes);

  space.intervals["attack_range"] = {0.0, 10.0};
  space.intervals["release"] = {0.0, 5.0};
  space.intervals["sleep"] = {0.1, 2.0};
  space.intervals["amp"] = {0.1, 2.0};
  space.intervals["bpm"] = {60.0, 180.0};
  space.intervals["cutoff"] = {60.0, 120.0};
  space.intervals["mix"] = {0.0, 1.0};
  return space;
}

ParamSpace load_param_space(const std::string& path) {
  const cfg::Config config = cfg::load_config(path);
  ParamSpace space;
  for (const auto& [section, entries] : config.sections) {
    for (const auto& [key, value] : entries) {
      const size_t dots = value.find("..");
      if (dots != std::string::npos) {
        const std::string lo_s = cfg::trim(value.substr(0, dots));
        const std::string hi_s = cfg::trim(value.substr(dots + 2));
        try {
          Interval iv{std::stod(lo_s), std::stod(hi_s)};
          if (iv.lo > iv.hi) {
            throw ConfigError("param '" + key + "': interval lower bound exceeds upper");
          }
          space.intervals[key] = iv;
        } catch (const std::invalid_argument&) {
          throw ConfigError("param '" + key + "': cannot parse interval '" + value + "'");
        }
      } else {
        std::vector<std::string> items = cfg::split_list(value);
        if (items.empty()) {
          throw ConfigError("param '" + key + "': empty value list");
        }
        space.lists[key] = std::move(items);
      }
    }
  }
  return space;
}

namespace {

Bindings sample_impl(const ParamSpace& space, const std::vector<std::string>& needed,
                     const std::set<std::string>* numeric_only, uint64_t seed) {
  Rng rng(seed);
  Bindings bindings;
  for (const std::string& name : needed) {
    if (bindings.count(name)) continue;
    if (const Interval* iv = space.find_interval(name)) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.2f", rng.uniform(iv->lo, iv->hi));
      bindings[name] = buf;
      continue;
    }
    if (const std::vector<std::string>* list = space.find_list(name)) {
      if (numeric_only && numeric_only->count(name)) {
        throw ResolutionError("placeholder '" + name +
                              "' requires a numeric interval but resolves to a list");
      }
      bindings[name] = (*list)[rng.below(list->size())];
      continue;
    }
    throw ResolutionError("unknown parameter '" + name + "'");
  }
  return bindings;
}

}  // namespace

Bindings sample_params(const ParamSpace& space, const std::vector<std::string>& needed,
                       uint64_t seed) {
  return sample_impl(space, needed, nullptr, seed);
}

Bindings sample_template_params(const ParamSpace& space, const Template& tpl, uint64_t seed) {
  std::set<std::string> numeric;
  for (const Slot& slot : tpl.slots) {
    if (slot.kind == SlotKind::kNumeric) numeric.insert(slot.name);
  }
  return sample_impl(space, tpl.placeholders, &numeric, seed);
}

RenderedProgram render(const Template& tpl, const Bindings& bindings) {
  RenderedProgram out;
  out.template_name = tpl.name;
  out.bindings = bindings;
  out.file_name = tpl.name + ".pi";

  std::string& text = out.text;
  text.reserve(tpl.body.size());
  size_t pos = 0;
  for (const Slot& slot : tpl.slots) {
    auto it = bindings.find(slot.name);
    if (it == bindings.end()) {
      throw ResolutionError("no binding for placeholder '" + slot.name + "'");
    }
    text.append(tpl.body, pos, slot.begin - pos);
    text.append(it->second);
    pos = slot.end;
  }
  text.append(tpl.body, pos, tpl.body.size() - pos);
  return out;
}

std::vector<Template> load_templates(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError("template directory does not exist: " + dir);
  }
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string file = entry.path().filename().string();
    if (entry.is_regular_file() && file.size() > 7 &&
        file.substr(file.size() - 7) == ".pi.tpl") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());

  std::vector<Template> templates;
  for (const fs::path& path : paths) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open template: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string stem = path.filename().string();
    stem.resize(stem.size() - 7);
    templates.push_back(parse_template(stem, buf.str()));
  }
  return templates;
}

std::vector<ManifestEntry> generate_corpus(const std::vector<Template>& templates,
                                           const ParamSpace& space, int per_template,
                                           uint64_t seed, const std::string& out_dir) {
  if (per_template < 1) throw ConfigError("per_template must be >= 1");
  std::set<std::string> names;
  for (const Template& tpl : templates) {
    if (!names.insert(tpl.name).second) {
      throw ConfigError("duplicate template name '" + tpl.name + "'");
    }
  }
  fs::create_directories(out_dir);

  std::vector<ManifestEntry> manifest;
  manifest.reserve(templates.size() * static_cast<size_t>(per_template));
  for (size_t t = 0; t < templates.size(); ++t) {
    for (int v = 0; v < per_template; ++v) {
      const uint64_t variant_seed = derive_seed(seed, t, static_cast<uint64_t>(v));
      RenderedProgram prog =
          render(templates[t], sample_template_params(space, templates[t], variant_seed));
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), "__%04d.pi", v);
      prog.file_name = templates[t].name + suffix;
      prog.seed = variant_seed;

      std::ofstream out(fs::path(out_dir) / prog.file_name, std::ios::binary);
      if (!out) throw IoError("cannot write program file: " + prog.file_name);
      out << prog.text;

      manifest.push_back({prog.file_name, prog.template_name, prog.seed, prog.bindings});
    }
  }

  std::ofstream mout(fs::path(out_dir) / "manifest.jsonl", std::ios::binary);
  if (!mout) throw IoError("cannot write manifest in " + out_dir);
  for (const ManifestEntry& entry : manifest) {
    json j;
    j["file"] = entry.file_name;
    j["template"] = entry.template_name;
    j["seed"] = entry.seed;
    j["bindings"] = entry.bindings;
    mout << j.dump() << '\n';
  }
  return manifest;
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (cfg::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    ManifestEntry entry;
    entry.file_name = j.value("file", "");
    entry.template_name = j.value("template", "");
    entry.seed = j.value("seed", uint64_t{0});
    if (entry.file_name.empty()) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": missing 'file'");
    }
    if (j.contains("bindings")) {
      for (auto it = j["bindings"].begin(); it != j["bindings"].end(); ++it) {
        entry.bindings[it.key()] = it.value().get<std::string>();
      }
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace sonalign::tpl
