#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aspire/embedding.hpp"
#include "aspire/text.hpp"

using namespace aspire;

TEST_CASE("cosine of a vector with itself is 1") {
    HashEmbedder embedder = HashEmbedder::with_builtin_synonyms();
    auto v = embedder.embed_root("snow");
    CHECK(cosine(v, v) == doctest::Approx(1.0));
}

TEST_CASE("synonym-table roots embed close together") {
    HashEmbedder embedder = HashEmbedder::with_builtin_synonyms();
    // "snowy mountain" roots to "snowi mountain", which the table aliases.
    CHECK(phrase_root("snowy mountain") == "snowi mountain");
    CHECK(cosine(embedder.embed_root("snow"), embedder.embed_root(phrase_root("snowy mountain"))) >=
          0.90);
    CHECK(cosine(embedder.embed_root("snow"), embedder.embed_root("snowi")) >= 0.95);
    CHECK(cosine(embedder.embed_root("water"), embedder.embed_root("ocean")) >= 0.95);
}

TEST_CASE("unrelated roots stay apart") {
    HashEmbedder embedder = HashEmbedder::with_builtin_synonyms();
    CHECK(cosine(embedder.embed_root("snow"), embedder.embed_root("keyboard")) < 0.5);
    CHECK(cosine(embedder.embed_root("dog"), embedder.embed_root("charcoal background")) < 0.5);
    // Multi-word roots sharing one token must not cross the collapse bar.
    CHECK(cosine(embedder.embed_root("red background"), embedder.embed_root("slate background")) <
          0.90);
}

TEST_CASE("embedding is deterministic") {
    HashEmbedder a = HashEmbedder::with_builtin_synonyms();
    HashEmbedder b = HashEmbedder::with_builtin_synonyms();
    CHECK(a.embed_root("grass field") == b.embed_root("grass field"));
}

TEST_CASE("the shipped synonym table equals the builtin one") {
    SynonymTable loaded = SynonymTable::load("data/synonym_table.json");
    CHECK(loaded == SynonymTable::builtin());
}

TEST_CASE("map embedder serves table vectors and falls back deterministically") {
    std::map<std::string, std::vector<double>> table = {
        {"dog", {1.0, 0.0}},
        {"cat", {0.9, 0.43589}},
    };
    MapEmbedder embedder(table, "toy");
    CHECK(cosine(embedder.embed_root("dog"), embedder.embed_root("cat")) > 0.85);
    CHECK(embedder.embed_root("unknown") == embedder.embed_root("unknown"));
}
