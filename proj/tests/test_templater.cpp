#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <doctest.h>

#include "sonalign/errors.hpp"
#include "sonalign/rng.hpp"
#include "sonalign/templater.hpp"

using namespace sonalign;
using namespace sonalign::tpl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// residual text with all placeholder spans removed
std::string residual_of_template(const Template& tpl) {
  std::string out;
  size_t pos = 0;
  for (const Slot& slot : tpl.slots) {
    out += tpl.body.substr(pos, slot.begin - pos);
    pos = slot.end;
  }
  return out + tpl.body.substr(pos);
}

std::string residual_of_render(const Template& tpl, const RenderedProgram& prog) {
  // remove the substituted values by walking the slots in order
  std::string out;
  size_t tpl_pos = 0, txt_pos = 0;
  for (const Slot& slot : tpl.slots) {
    const size_t literal = slot.begin - tpl_pos;
    out += prog.text.substr(txt_pos, literal);
    txt_pos += literal + prog.bindings.at(slot.name).size();
    tpl_pos = slot.end;
  }
  return out + prog.text.substr(txt_pos);
}

}  // namespace

TEST_CASE("parse extracts ordered placeholders") {
  const Template one = parse_template("t", "play {{ note }}");
  REQUIRE(one.placeholders.size() == 1);
  CHECK(one.placeholders[0] == "note");

  const Template two = parse_template("t", "use_bpm {{ bpm }}\nsample :{{ sample }}");
  REQUIRE(two.placeholders.size() == 2);
  CHECK(two.placeholders[0] == "bpm");
  CHECK(two.placeholders[1] == "sample");

  // repeated identifiers stay unique in the list but keep every slot
  const Template rep = parse_template("t", "{{ a }} {{ b }} {{ a }}");
  CHECK(rep.placeholders.size() == 2);
  CHECK(rep.slots.size() == 3);
}

TEST_CASE("numeric slots use the percent delimiters") {
  const Template tpl = parse_template("t", "sleep {% sleep %}\nplay {{ note }}");
  REQUIRE(tpl.slots.size() == 2);
  CHECK(tpl.slots[0].kind == SlotKind::kNumeric);
  CHECK(tpl.slots[0].name == "sleep");
  CHECK(tpl.slots[1].kind == SlotKind::kAny);
}

TEST_CASE("parse errors carry byte offsets") {
  CHECK_THROWS_WITH_AS(parse_template("t", "{{ broken"), doctest::Contains("offset 0"),
                       ParseError);
  CHECK_THROWS_WITH_AS(parse_template("t", "play x }} y"), doctest::Contains("offset 7"),
                       ParseError);
  CHECK_THROWS_AS(parse_template("t", "{{  }}"), ParseError);
  CHECK_THROWS_AS(parse_template("t", ""), ParseError);
}

TEST_CASE("sampling draws from the configured domains") {
  const ParamSpace space = default_param_space();

  const Bindings character = sample_params(space, {"character"}, 1);
  const auto& characters = *space.find_list("character");
  CHECK(std::find(characters.begin(), characters.end(), character.at("character")) !=
        characters.end());

  // interval lookup falls back to the _range suffix and formats 2 decimals
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const Bindings b = sample_params(space, {"attack"}, seed);
    const double v = std::stod(b.at("attack"));
    CHECK(v >= 0.0);
    CHECK(v <= 10.0);
    CHECK(b.at("attack").find('.') != std::string::npos);
    CHECK(b.at("attack").size() - b.at("attack").find('.') == 3);
  }

  const Bindings note = sample_params(space, {"note"}, 2);
  const auto& notes = *space.find_list("notes");
  // singular identifier resolves against the plural list we ship
  CHECK(notes.size() == 49);
  (void)note;

  CHECK_THROWS_WITH_AS(sample_params(space, {"flux_capacitor"}, 0),
                       doctest::Contains("flux_capacitor"), ResolutionError);
}

TEST_CASE("numeric slots reject categorical parameters") {
  const ParamSpace space = default_param_space();
  const Template tpl = parse_template("t", "sample :{% samples %}");
  CHECK_THROWS_AS(sample_template_params(space, tpl, 0), ResolutionError);
}

TEST_CASE("render substitutes and leaves everything else byte-identical") {
  const Template tpl = parse_template("t", "play {{ note }}");
  const RenderedProgram prog = render(tpl, {{"note", "C4"}});
  CHECK(prog.text == "play C4");
  CHECK(prog.file_name == "t.pi");

  const Template fixed = parse_template("t2", "use_bpm 120\nsleep 1\n");
  CHECK(render(fixed, {}).text == fixed.body);

  CHECK_THROWS_WITH_AS(render(tpl, {}), doctest::Contains("note"), ResolutionError);
}

TEST_CASE("substitution locality, determinism and seed variation") {
  const ParamSpace space = default_param_space();
  const Template tpl = parse_template(
      "beat", "use_bpm {{ bpm }}\nwith_fx :{{ effects }} do\n  sample :{{ samples }}, attack: "
              "{{ attack }}\n  sleep {{ sleep }}\nend\n");

  for (uint64_t seed = 0; seed < 20; ++seed) {
    const RenderedProgram prog = render(tpl, sample_template_params(space, tpl, seed));
    CHECK(residual_of_render(tpl, prog) == residual_of_template(tpl));
  }

  const RenderedProgram a = render(tpl, sample_template_params(space, tpl, 7));
  const RenderedProgram b = render(tpl, sample_template_params(space, tpl, 7));
  CHECK(a.text == b.text);

  // over seed pairs, almost all renders differ in at least one binding
  int differing = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const Bindings x = sample_template_params(space, tpl, 1000 + seed);
    const Bindings y = sample_template_params(space, tpl, 2000 + seed);
    if (x != y) ++differing;
  }
  CHECK(differing >= 95);
}

TEST_CASE("coverage: every value of a small list appears across 200 variants") {
  ParamSpace space;
  space.lists["mode"] = {"a", "b", "c", "d", "e", "f", "g", "h"};
  std::set<std::string> seen;
  for (int v = 0; v < 200; ++v) {
    seen.insert(sample_params(space, {"mode"}, derive_seed(4242, 0, v)).at("mode"));
  }
  CHECK(seen.size() == 8);
}

TEST_CASE("corpus generation writes files and a manifest") {
  TempDir dir("sonalign_tpl_corpus");
  const fs::path tpl_dir = dir.path / "templates";
  fs::create_directories(tpl_dir);
  std::ofstream(tpl_dir / "lead.pi.tpl") << "synth :{{ synths }}\nplay {{ note }}\n";
  std::ofstream(tpl_dir / "drums.pi.tpl") << "sample :{{ samples }}\nsleep {% sleep %}\n";

  const std::vector<Template> templates = load_templates(tpl_dir.string());
  REQUIRE(templates.size() == 2);
  CHECK(templates[0].name == "drums");  // sorted by name

  const fs::path out1 = dir.path / "corpus1";
  const auto manifest =
      generate_corpus(templates, default_param_space(), 5, 99, out1.string());
  CHECK(manifest.size() == 10);
  CHECK(manifest[0].file_name == "drums__0000.pi");
  CHECK(fs::exists(out1 / "drums__0004.pi"));
  CHECK(fs::exists(out1 / "lead__0000.pi"));
  CHECK(fs::exists(out1 / "manifest.jsonl"));

  // single template, single variant
  const auto single = generate_corpus({templates[0]}, default_param_space(), 1, 0,
                                      (dir.path / "single").string());
  REQUIRE(single.size() == 1);
  CHECK(single[0].file_name == "drums__0000.pi");

  // identical master seeds give byte-identical corpora
  const fs::path out2 = dir.path / "corpus2";
  generate_corpus(templates, default_param_space(), 5, 99, out2.string());
  for (const auto& entry : manifest) {
    CHECK(slurp(out1 / entry.file_name) == slurp(out2 / entry.file_name));
  }
  CHECK(slurp(out1 / "manifest.jsonl") == slurp(out2 / "manifest.jsonl"));

  // manifest round-trip
  const auto loaded = load_manifest((out1 / "manifest.jsonl").string());
  REQUIRE(loaded.size() == 10);
  CHECK(loaded[0].template_name == "drums");
  CHECK(loaded[0].bindings.count("samples") == 1);

  // duplicate template names are rejected
  CHECK_THROWS_AS(
      generate_corpus({templates[0], templates[0]}, default_param_space(), 1, 0,
                      (dir.path / "dup").string()),
      ConfigError);
  CHECK_THROWS_AS(generate_corpus(templates, default_param_space(), 0, 0,
                                  (dir.path / "zero").string()),
                  ConfigError);
}

TEST_CASE("param space files define lists and intervals") {
  TempDir dir("sonalign_tpl_params");
  const fs::path file = dir.path / "params.conf";
  std::ofstream(file) << "# custom space\n"
                      << "samples = kick, snare\n"
                      << "wobble = 0.5 .. 1.5\n";
  const ParamSpace space = load_param_space(file.string());
  REQUIRE(space.find_list("samples") != nullptr);
  CHECK(space.find_list("samples")->size() == 2);
  REQUIRE(space.find_interval("wobble") != nullptr);
  CHECK(space.find_interval("wobble")->lo == 0.5);

  std::ofstream(dir.path / "bad.conf") << "broken = 5 .. x\n";
  CHECK_THROWS_AS(load_param_space((dir.path / "bad.conf").string()), ConfigError);
}
