#include "kgrag/ontology.h"

#include <gtest/gtest.h>

#include <algorithm>

#include "kgrag/text_util.h"
#include "support/fixtures.h"

namespace kgrag {
namespace {

using testing::spec;

std::string bundled_document() { return text::read_file(testing::ontology_path()); }

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

TEST(OntologySpec, BundledSpecDefinesCoreLabels) {
  EXPECT_EQ(spec().entities().size(), 12u);
  EXPECT_EQ(spec().relations().size(), 8u);
  for (const auto& label : OntologySpec::core_entity_labels()) EXPECT_TRUE(spec().entity_type(label)) << label;
  for (const auto& label : OntologySpec::core_relation_labels()) EXPECT_TRUE(spec().relation_type(label)) << label;
  EXPECT_EQ(spec().base_iri(), "http://purl.org/causalamd/");
  EXPECT_EQ(spec().synonyms().at("amd"), "age-related macular degeneration");
}

TEST(OntologySpec, LabelsAreByteExact) {
  EXPECT_FALSE(spec().entity_type("Disease"));
  EXPECT_FALSE(spec().entity_type("disease "));
  EXPECT_FALSE(spec().relation_type("causes"));
  EXPECT_EQ(spec().entity_type("risk_factor")->label(), "risk_factor");
}

TEST(OntologySpec, MissingCoreLabelIsReported) {
  auto doc = bundled_document();
  auto pos = doc.find("biomarker = ");
  doc.erase(pos, doc.find('\n', pos) - pos + 1);
  try {
    OntologySpec::parse(doc, "test.ontology");
    FAIL() << "expected OntologyLoadError";
  } catch (const OntologyLoadError& e) {
    EXPECT_NE(std::string(e.what()).find("biomarker"), std::string::npos) << e.what();
  }
}

TEST(OntologySpec, UnknownLabelInPriorityCarriesLine) {
  auto doc = bundled_document();
  auto pos = doc.find("[type_priority]\n");
  doc.insert(pos + 16, "disorder\n");
  try {
    OntologySpec::parse(doc, "test.ontology");
    FAIL() << "expected OntologyLoadError";
  } catch (const OntologyLoadError& e) {
    EXPECT_GT(e.line(), 0u);
    EXPECT_NE(std::string(e.what()).find("test.ontology:"), std::string::npos);
  }
}

TEST(OntologySpec, IncompletePriorityRejected) {
  auto doc = bundled_document();
  auto pos = doc.find("body_part\n\n[iri]");
  doc.erase(pos, 10);
  EXPECT_THROW(OntologySpec::parse(doc), OntologyLoadError);
}

TEST(OntologySpec, UnnormalizedSynonymKeyRejected) {
  auto doc = bundled_document();
  auto pos = doc.find("[trailing_tokens]");
  doc.insert(pos, "\"AMD\" = \"age-related macular degeneration\"\n");
  EXPECT_THROW(OntologySpec::parse(doc), OntologyLoadError);
}

TEST(OntologySpec, ExtraLabelFlowsIntoPromptWithoutCodeChange) {
  auto doc = bundled_document();
  doc.insert(doc.find("\n[relations]") + 1, "pathway = \"A biological pathway.\"\n\n");
  doc.insert(doc.find("\n[synonyms]"), "\ninhibit = \"Suppresses another entity.\"\n");
  doc.insert(doc.find("body_part\n\n[iri]") + 10, "pathway\n");
  auto extended = OntologySpec::parse(doc);
  EXPECT_TRUE(extended.entity_type("pathway"));
  EXPECT_TRUE(extended.relation_type("inhibit"));
  auto prompt = build_extraction_prompt(extended, PromptMode::kZeroShot);
  EXPECT_NE(prompt.find("**pathway**"), std::string::npos);
  EXPECT_NE(prompt.find("**inhibit**"), std::string::npos);
}

TEST(OntologySpec, PriorityRankFollowsDeclaredOrder) {
  EXPECT_LT(spec().priority_rank(*spec().entity_type("disease")), spec().priority_rank(*spec().entity_type("gene")));
  EXPECT_LT(spec().priority_rank(*spec().entity_type("complication")),
            spec().priority_rank(*spec().entity_type("symptom")));
}

TEST(PromptMode, ParsesBothSpellings) {
  EXPECT_EQ(parse_prompt_mode("few"), PromptMode::kFewShot);
  EXPECT_EQ(parse_prompt_mode("single_shot"), PromptMode::kSingleShot);
  EXPECT_EQ(parse_prompt_mode("zero"), PromptMode::kZeroShot);
  EXPECT_FALSE(parse_prompt_mode("many"));
}

TEST(ExtractionPrompt, ContainsEveryLabelAndRule) {
  for (auto mode : {PromptMode::kZeroShot, PromptMode::kSingleShot, PromptMode::kFewShot}) {
    auto prompt = build_extraction_prompt(spec(), mode);
    for (const auto& d : spec().entities()) EXPECT_NE(prompt.find("**" + d.label + "**"), std::string::npos);
    for (const auto& d : spec().relations()) EXPECT_NE(prompt.find("**" + d.label + "**"), std::string::npos);
    EXPECT_NE(prompt.find("**Consistency Rule**"), std::string::npos);
    EXPECT_NE(prompt.find("**Ambiguous Entities**"), std::string::npos);
    EXPECT_NE(prompt.find("Use these exact labels; do not introduce new labels or synonyms."), std::string::npos);
    EXPECT_NE(prompt.find("{'relation_type': 'relation_type_value', 'entity1_type': 'entity1_type_value', "
                          "'entity1_name': 'entity1_name_value', 'entity2_type': 'entity2_type_value', "
                          "'entity2_name': 'entity2_name_value'}"),
              std::string::npos);
  }
}

TEST(ExtractionPrompt, ExampleCountMatchesMode) {
  EXPECT_EQ(count(build_extraction_prompt(spec(), PromptMode::kZeroShot), "Text: \""), 0u);
  EXPECT_EQ(count(build_extraction_prompt(spec(), PromptMode::kSingleShot), "Text: \""), 1u);
  auto few = build_extraction_prompt(spec(), PromptMode::kFewShot);
  EXPECT_EQ(count(few, "Text: \""), 3u);
  EXPECT_NE(few.find("Text: \"AMD affects the retina and causes vision loss.\""), std::string::npos);
  EXPECT_NE(few.find("Text: \"Smoking is a risk factor that aggravates AMD progression.\""), std::string::npos);
  EXPECT_NE(few.find("Text: \"Anti-VEGF therapy treats wet AMD and improves vision.\""), std::string::npos);
  EXPECT_EQ(few.find("**Examples**"), few.rfind("**Examples**"));
  EXPECT_EQ(build_extraction_prompt(spec(), PromptMode::kZeroShot).find("**Examples**"), std::string::npos);
}

TEST(ExtractionPrompt, FewShotMatchesGolden) {
  auto golden = text::read_file(testing::golden_dir() / "prompt_few.txt");
  EXPECT_EQ(build_extraction_prompt(spec(), PromptMode::kFewShot), golden);
}

TEST(ExtractionPrompt, ExampleOutputsParseUnderTheirOwnSpec) {
  for (const auto& ex : prompt_examples()) {
    EXPECT_FALSE(ex.output_lines.empty());
    for (const auto& line : ex.output_lines) {
      EXPECT_EQ(line.front(), '{');
      EXPECT_EQ(line.back(), '}');
    }
  }
}

}  // namespace
}  // namespace kgrag
