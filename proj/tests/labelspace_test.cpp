#include <gtest/gtest.h>

#include <random>
#include <string>
#include <utility>
#include <vector>

#include <unicode/locid.h>
#include <unicode/unistr.h>

#include "retrovec/labelspace.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace retrovec;
using oracle::random_text;

namespace {

std::string uri(std::string_view text, std::string_view lang = "en") {
  return standardize(text, LanguageTag(lang)).uri();
}

std::string icu_lower(const std::string& s) {
  std::string out;
  icu::UnicodeString::fromUTF8(s).toLower(icu::Locale::getRoot()).toUTF8String(out);
  return out;
}

}  // namespace

TEST(LanguageTag, Validation) {
  EXPECT_EQ(LanguageTag("en").code(), "en");
  EXPECT_EQ(LanguageTag("fra").code(), "fra");
  EXPECT_TRUE(LanguageTag("en").is_english());
  for (const char* bad : {"", "e", "engl", "EN", "e1", "fr-"}) {
    try {
      LanguageTag t(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidLanguage) << bad;
    }
  }
}

TEST(StandardLabel, RendersAndParses) {
  StandardLabel l(LanguageTag("fr"), "chat_noir");
  EXPECT_EQ(l.uri(), "/c/fr/chat_noir");
  EXPECT_EQ(l.word_count(), 2u);
  EXPECT_EQ(StandardLabel::from_uri("/c/fr/chat_noir"), l);
  EXPECT_EQ(StandardLabel::from_uri("/c/en/cat/n/wn/animal").uri(), "/c/en/cat");
  for (const char* bad : {"", "_a", "a_", "a__b", "A", "a b", "a/b"}) {
    EXPECT_THROW(StandardLabel(english(), bad), Error) << bad;
  }
  EXPECT_THROW(StandardLabel::from_uri("cat"), Error);
  EXPECT_THROW(StandardLabel::from_uri("/c/en/"), Error);
}

TEST(Standardize, WorkedExamples) {
  EXPECT_EQ(uri("Giving an example"), "/c/en/give_example");
  EXPECT_EQ(uri("New York City"), "/c/en/new_york_city");
  EXPECT_EQ(uri("Polish"), "/c/en/polish");
}

TEST(Standardize, CollisionsTheLookupDependsOn) {
  EXPECT_EQ(uri("Polish"), uri("polish"));
  EXPECT_EQ(uri("dried"), uri("dry"));
  EXPECT_EQ(uri("dried"), "/c/en/dry");
}

TEST(Standardize, Tokenization) {
  EXPECT_EQ(uri("  hello,   world! "), "/c/en/hello_world");
  EXPECT_EQ(uri("\"quoted\""), "/c/en/quote");
  EXPECT_EQ(uri("rock 'n' roll"), "/c/en/rock_n_roll");
  EXPECT_EQ(uri("hot_dog"), "/c/en/hot_dog");
  EXPECT_EQ(uri("and/or"), "/c/en/and_or");
  EXPECT_EQ(uri("e-mail"), "/c/en/e-mail");
  EXPECT_EQ(uri("#hashtag"), "/c/en/#hashtag");
  EXPECT_EQ(uri("C++"), "/c/en/c++");
}

TEST(Standardize, StopwordsOnlyForPhrases) {
  EXPECT_EQ(uri("the"), "/c/en/the");
  EXPECT_EQ(uri("The Cat"), "/c/en/cat");
  EXPECT_EQ(uri("of the"), "/c/en/of_the");
  EXPECT_EQ(uri("cat and dog"), "/c/en/cat_dog");
}

TEST(Standardize, NonEnglishIsNotLemmatized) {
  EXPECT_EQ(uri("Chats", "fr"), "/c/fr/chats");
  EXPECT_EQ(uri("\xC3\x89T\xC3\x89", "fr"), "/c/fr/\xC3\xA9t\xC3\xA9");
}

TEST(Standardize, UnicodeFoldingAndComposition) {
  // Decomposed and precomposed é agree.
  EXPECT_EQ(uri("Cafe\xCC\x81", "fr"), uri("caf\xC3\xA9", "fr"));
  EXPECT_EQ(uri("Stra\xC3\x9F" "e", "de"), "/c/de/strasse");
  EXPECT_EQ(uri("\xCE\xA3\xCE\x9F\xCE\xA6\xCE\x9F\xCE\xA3", "el"), uri("\xCF\x83\xCE\xBF\xCF\x86\xCE\xBF\xCF\x82", "el"));
}

TEST(Standardize, Errors) {
  for (const char* empty : {"", "   ", "...", "!?", "\t\n"}) {
    try {
      standardize(empty, english());
      ADD_FAILURE() << "'" << empty << "'";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::EmptyAfterNormalization);
    }
  }
  EXPECT_FALSE(Standardizer().try_standardize("...", english()));
}

TEST(Standardize, UsesVocabularyForLemmaCandidates) {
  Standardizer st;
  TokenSet vocab{"glass", "axe"};
  EXPECT_EQ(st.standardize("glass", english(), &vocab).uri(), "/c/en/glass");
  TokenSet vocab2{"cat"};
  EXPECT_EQ(st.standardize("cats", english(), &vocab2).uri(), "/c/en/cat");
  TokenSet vocab3{"cats"};
  EXPECT_EQ(st.standardize("cats", english(), &vocab3).uri(), "/c/en/cats");
}

TEST(Standardize, StandardizeUri) {
  Standardizer st;
  EXPECT_EQ(st.standardize_uri("/c/en/Giving_an_example").uri(), "/c/en/give_example");
  EXPECT_EQ(st.standardize_uri("/c/fr/chats/n").uri(), "/c/fr/chats");
}

TEST(Lemmatize, WorkedExamples) {
  auto rules = LemmaRuleSet::english_default();
  EXPECT_EQ(lemmatize("dried", rules), "dry");
  EXPECT_EQ(lemmatize("polish", rules), "polish");
  EXPECT_EQ(lemmatize("examples", rules), "example");
}

// Regular and irregular inflections as listed in common English grammar
// references. The vocabulary holds every form so that the rule table, not
// the length fallback, decides.
TEST(Lemmatize, InflectionList) {
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"examples", "example"}, {"cats", "cat"},         {"dogs", "dog"},         {"buses", "bus"},
      {"boxes", "box"},        {"buzzes", "buzz"},      {"churches", "church"},  {"dishes", "dish"},
      {"cities", "city"},      {"women", "woman"},      {"flies", "fly"},        {"hopes", "hope"},
      {"hoped", "hope"},       {"walked", "walk"},      {"walking", "walk"},     {"hoping", "hope"},
      {"played", "play"},      {"playing", "play"},     {"jumps", "jump"},       {"taller", "tall"},
      {"tallest", "tall"},     {"larger", "large"},     {"largest", "large"},    {"faster", "fast"},
      {"nicer", "nice"},       {"nicest", "nice"},      {"wishes", "wish"},      {"foxes", "fox"},
      {"classes", "class"},    {"ladies", "lady"},      {"babies", "baby"},      {"policemen", "policeman"},
      {"dried", "dry"},        {"running", "run"},      {"went", "go"},          {"children", "child"},
      {"better", "good"},      {"mice", "mouse"},       {"books", "book"},       {"trees", "tree"},
      {"kisses", "kiss"},      {"watches", "watch"},    {"danced", "dance"},     {"baked", "bake"},
      {"asked", "ask"},        {"looking", "look"},     {"wanted", "want"},      {"opened", "open"},
      {"happier", "happy"},    {"geese", "goose"},      {"stopped", "stop"},     {"written", "write"},
  };
  ASSERT_GE(pairs.size(), 50u);
  TokenSet vocab;
  for (const auto& [form, lemma] : pairs) {
    vocab.insert(form);
    vocab.insert(lemma);
  }
  auto rules = LemmaRuleSet::english_default();
  for (const auto& [form, lemma] : pairs) EXPECT_EQ(lemmatize(form, rules, &vocab), lemma) << form;
}

TEST(Lemmatize, ExceptionsTakePrecedence) {
  LemmaRuleSet rules({{"noun", "s", ""}}, {{"news", "news"}, {"axes", "axis"}});
  TokenSet vocab{"new", "axe", "axis"};
  EXPECT_EQ(lemmatize("news", rules, &vocab), "news");
  EXPECT_EQ(lemmatize("axes", rules, &vocab), "axis");
}

TEST(Lemmatize, LengthFallbackWithoutVocab) {
  auto rules = LemmaRuleSet::english_default();
  EXPECT_EQ(lemmatize("is", rules), "be");
  EXPECT_EQ(lemmatize("as", rules), "as");
  EXPECT_EQ(lemmatize("s", rules), "s");
}

TEST(LemmaRuleSet, RejectsNonTerminatingRules) {
  EXPECT_THROW(LemmaRuleSet({{"noun", "s", "xyz"}}, {}), Error);
  EXPECT_THROW(LemmaRuleSet({{"noun", "", ""}}, {}), Error);
  EXPECT_NO_THROW(LemmaRuleSet({{"noun", "s", "ss"}}, {}));
}

TEST(LemmaData, LoadersReadFiles) {
  testutil::TempDir dir;
  testutil::write_file(dir.file("exc.tsv"), "# comment\n\nfeet\tfoot\n  oxen\tox\n");
  testutil::write_file(dir.file("stop.txt"), "# stop\nthe\n\nof\n");
  auto exc = load_exceptions(dir.file("exc.tsv"));
  EXPECT_EQ(exc.size(), 2u);
  EXPECT_EQ(exc.at("oxen"), "ox");
  auto stop = load_stopwords(dir.file("stop.txt"));
  EXPECT_EQ(stop, (TokenSet{"the", "of"}));
  EXPECT_THROW(load_stopwords(dir.file("missing")), Error);
  testutil::write_file(dir.file("bad.tsv"), "feet foot\n");
  EXPECT_THROW(load_exceptions(dir.file("bad.tsv")), Error);

  Standardizer st(LemmaRuleSet::english_default(), stop);
  EXPECT_EQ(st.standardize("cat and dog", english()).uri(), "/c/en/cat_and_dog");
}

TEST(HashDigits, Styles) {
  EXPECT_EQ(hash_digits("/c/en/1990s"), "/c/en/#s");
  EXPECT_EQ(hash_digits("a12b3"), "a#b#");
  EXPECT_EQ(hash_digits("a12b3", DigitStyle::per_digit), "a##b#");
  EXPECT_EQ(hash_digits("none"), "none");
}

TEST(SingleTokenSet, KeepsOneWordLabels) {
  auto s = single_token_set({"Cat", "hot dog", "New_York", "...", "dogs"});
  EXPECT_EQ(s, (TokenSet{"cat", "dogs"}));
}

TEST(StandardizeProperty, IdempotentOnRandomStrings) {
  std::mt19937_64 rng(7);
  Standardizer st;
  TokenSet vocab{"cat", "dry", "run", "give", "example", "chat", "es", "ed"};
  std::size_t succeeded = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string text = random_text(rng);
    const TokenSet* v = (i % 2) ? &vocab : nullptr;
    const LanguageTag lang(i % 3 == 0 ? "fr" : "en");
    auto first = st.try_standardize(text, lang, v);
    if (!first) continue;
    ++succeeded;
    auto again = st.try_standardize(first->text(), lang, v);
    ASSERT_TRUE(again) << "'" << text << "' -> " << first->uri();
    ASSERT_EQ(*again, *first) << "'" << text << "'";
  }
  EXPECT_GT(succeeded, 50000u);
}

TEST(StandardizeProperty, CaseCollapse) {
  std::mt19937_64 rng(11);
  Standardizer st;
  for (int i = 0; i < 20000; ++i) {
    std::string text = random_text(rng);
    auto a = st.try_standardize(text, english());
    auto b = st.try_standardize(icu_lower(text), english());
    ASSERT_EQ(a.has_value(), b.has_value()) << text;
    if (a) {
      ASSERT_EQ(*a, *b) << text;
    }
  }
}

TEST(StandardizeProperty, SingleTokensKeepStopwords) {
  for (const auto& w : default_stopwords()) EXPECT_EQ(standardize(w, english()).text(), w);
}
