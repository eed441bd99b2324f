#include <doctest.h>

#include "crg/text.hpp"

using namespace crg;

TEST_CASE("tokenize lowercases and splits on punctuation") {
  CHECK(tokenize("Mild  nodules, 5.5 mm.") == Tokens{"mild", "nodules", "5.5", "mm"});
  CHECK(tokenize("No pleural-effusion;") == Tokens{"no", "pleural", "effusion"});
  CHECK(tokenize("") == Tokens{});
  CHECK(tokenize(" \t\n") == Tokens{});
  CHECK(tokenize("1.2.3") == Tokens{"1.2.3"});
  CHECK(tokenize("end. 3") == Tokens{"end", "3"});
  CHECK(tokenize("caf\xc3\xa9 OK") == Tokens{"caf\xc3\xa9", "ok"});
}

TEST_CASE("tokenize keeps the sample id") {
  const auto r = tokenize("s1", "A B");
  CHECK(r.sample_id == "s1");
  CHECK(r.tokens == Tokens{"a", "b"});
}

TEST_CASE("porter_stem reference vocabulary") {
  const std::pair<const char*, const char*> cases[] = {
      {"caresses", "caress"},   {"ponies", "poni"},       {"ties", "ti"},
      {"caress", "caress"},     {"cats", "cat"},          {"feed", "feed"},
      {"agreed", "agre"},       {"plastered", "plaster"}, {"motoring", "motor"},
      {"sing", "sing"},         {"conflated", "conflat"}, {"troubled", "troubl"},
      {"sized", "size"},        {"hopping", "hop"},       {"tanned", "tan"},
      {"falling", "fall"},      {"hissing", "hiss"},      {"fizzed", "fizz"},
      {"failing", "fail"},      {"filing", "file"},       {"happy", "happi"},
      {"sky", "sky"},           {"relational", "relat"},  {"conditional", "condit"},
      {"rational", "ration"},   {"valenci", "valenc"},    {"digitizer", "digit"},
      {"triplicate", "triplic"}, {"formative", "form"},   {"formalize", "formal"},
      {"electrical", "electr"}, {"hopeful", "hope"},      {"goodness", "good"},
      {"revival", "reviv"},     {"allowance", "allow"},   {"inference", "infer"},
      {"airliner", "airlin"},   {"adjustable", "adjust"}, {"defensible", "defens"},
      {"irritant", "irrit"},    {"replacement", "replac"}, {"adjustment", "adjust"},
      {"dependent", "depend"},  {"adoption", "adopt"},    {"homologou", "homolog"},
      {"communism", "commun"},  {"activate", "activ"},    {"angulariti", "angular"},
      {"homologous", "homolog"}, {"effective", "effect"}, {"bowdlerize", "bowdler"},
      {"probate", "probat"},    {"rate", "rate"},         {"cease", "ceas"},
      {"controll", "control"},  {"roll", "roll"},         {"nodules", "nodul"},
      {"effusions", "effus"},   {"opacities", "opac"},    {"is", "is"},
      {"a", "a"},               {"5.5", "5.5"},
  };
  for (const auto& [word, stem] : cases) {
    CAPTURE(word);
    CHECK(porter_stem(word) == stem);
  }
}

TEST_CASE("split_sentences") {
  CHECK(split_sentences("No effusion. Nodule 5.5 mm; stable\nend") ==
        std::vector<std::string>{"No effusion", " Nodule 5.5 mm", " stable", "end"});
  CHECK(split_sentences("...").empty());
  CHECK(split_sentences("").empty());
}
