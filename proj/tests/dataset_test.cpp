#include <doctest.h>

#include "amtkit/dataset.hpp"
#include "support.hpp"

using namespace amtkit;
using namespace testsupport;

namespace {

const VocabConfig cfg;
const ByteTokenizer byte_tok;

size_t midi_token_count(const TrainingExample& ex) {
    size_t overhead = 1;  // EOS
    if (ex.prefix_len)
        overhead += ex.prefix_len + 1;  // text prefix + separator
    return ex.ids.size() - overhead;
}

TokenSequence midi_portion(const TrainingExample& ex) {
    TokenSequence body;
    body.cfg = cfg;
    const size_t begin = ex.prefix_len ? ex.prefix_len + 1 : 0;
    const size_t end = ex.ids.size() - 1;  // EOS
    body.ids.assign(ex.ids.begin() + begin, ex.ids.begin() + end);
    return body;
}

NoteSeq dense_notes(std::mt19937_64& rng, size_t count, double span) {
    std::uniform_real_distribution<double> onset(0.0, span);
    std::uniform_int_distribution<int> pitch(30, 90);
    NoteSeq notes;
    for (size_t i = 0; i < count; ++i)
        notes.push_back({onset(rng), 0.25, 0, pitch(rng), 96});
    sort_notes(notes);
    return notes;
}

}  // namespace

TEST_CASE("tokenize_text is byte-level and truncates at the head") {
    CHECK(tokenize_text("", byte_tok).empty());
    const auto ids = tokenize_text("abc", byte_tok);
    CHECK(ids == std::vector<uint32_t>{'a', 'b', 'c'});

    const std::string longcap(300, 'x');
    const auto truncated = tokenize_text(longcap, byte_tok);
    CHECK(truncated.size() == 256);
    for (uint32_t id : truncated) CHECK(id == 'x');
}

TEST_CASE("build_finetune_example layout") {
    const NoteSeq one = {{1.0, 0.5, 0, 60, 96}};
    const TrainingExample ex = build_finetune_example("x", one, cfg, byte_tok);
    CHECK(ex.ids.size() == 6);  // 1 text + separator + 3 + EOS
    CHECK(ex.prefix_len == 1);
    CHECK(ex.kind == ExampleKind::Finetune);
    CHECK(ex.ids[0] == 'x');
    CHECK(ex.ids[1] == cfg.separator_id);
    CHECK(ex.ids.back() == cfg.eos_id);
    CHECK(validate(midi_portion(ex)).ok);
}

TEST_CASE("build_finetune_example truncates at a triple boundary") {
    std::mt19937_64 rng(2);
    const NoteSeq notes = dense_notes(rng, 700, 90.0);  // 2100 music tokens
    const TrainingExample ex = build_finetune_example("cap", notes, cfg, byte_tok);
    CHECK(midi_token_count(ex) == 2046);  // 682 whole triples
    CHECK(ex.ids.size() == 3 + 1 + 2046 + 1);
    CHECK(validate(midi_portion(ex)).ok);
}

TEST_CASE("build_finetune_example rejects empty notes") {
    try {
        build_finetune_example("x", {}, cfg, byte_tok);
        FAIL("expected EmptyMidi");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::EmptyMidi);
    }
}

TEST_CASE("build_infill_examples draws two deterministic variants") {
    std::mt19937_64 rng(3);
    const NoteSeq notes = dense_notes(rng, 60, 80.0);

    std::mt19937_64 a(77), b(77), c(78);
    const auto va = build_infill_examples("cap", notes, a, cfg, byte_tok);
    const auto vb = build_infill_examples("cap", notes, b, cfg, byte_tok);
    const auto vc = build_infill_examples("cap", notes, c, cfg, byte_tok);
    CHECK(va[0].ids == vb[0].ids);
    CHECK(va[1].ids == vb[1].ids);
    CHECK(va[0].ids != vc[0].ids);  // different draw, different interleaving
    CHECK(va[0].kind == ExampleKind::Infill);

    // each variant carries every note exactly once
    CHECK(midi_token_count(va[0]) == 3 * notes.size());
    CHECK(midi_token_count(va[1]) == 3 * notes.size());
    CHECK(validate(midi_portion(va[0])).ok);
    CHECK(validate(midi_portion(va[1])).ok);

    // and the future set is marked anticipated
    size_t anticipated = 0;
    for (uint32_t id : midi_portion(va[0]).ids)
        if (event_of(id - cfg.text_vocab_size).anticipated)
            ++anticipated;
    CHECK(anticipated > 0);
    CHECK(anticipated % 3 == 0);
}

TEST_CASE("build_infill_examples without caption has no prefix") {
    std::mt19937_64 rng(4), draws(5);
    const NoteSeq notes = dense_notes(rng, 20, 50.0);
    const auto variants = build_infill_examples(std::nullopt, notes, draws, cfg, byte_tok);
    CHECK(variants[0].prefix_len == 0);
    CHECK(variants[0].ids.back() == cfg.eos_id);
    CHECK(variants[0].ids.size() == 3 * notes.size() + 1);
}

TEST_CASE("build_infill_examples needs three distinct onsets") {
    NoteSeq sparse = {{1.0, 0.5, 0, 60, 96}, {1.0, 0.5, 0, 64, 96}, {2.0, 0.5, 0, 67, 96}};
    std::mt19937_64 rng(6);
    try {
        build_infill_examples("x", sparse, rng, cfg, byte_tok);
        FAIL("expected TooSparse");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::TooSparse);
    }
}

TEST_CASE("pack_pretrain chunking arithmetic") {
    auto doc_of = [&](size_t len) {
        TokenSequence doc;
        doc.cfg = cfg;
        for (size_t i = 0; i < len; ++i)
            doc.ids.push_back(cfg.midi_base() + uint32_t(i % VocabConfig::kMidiVocabSize));
        return doc;
    };

    // 3000 + 2 + 1500 + 2 = 4504 -> two full examples, 408 ids dropped
    const auto packed = pack_pretrain({doc_of(3000), doc_of(1500)}, 2048, cfg);
    REQUIRE(packed.size() == 2);
    CHECK(packed[0].ids.size() == 2048);
    CHECK(packed[1].ids.size() == 2048);
    CHECK(packed[0].kind == ExampleKind::Pretrain);
    CHECK(packed[0].prefix_len == 0);
    CHECK(packed[0].ids[0] == cfg.separator_id);
    CHECK(packed[0].ids[1] == cfg.midi_base());

    // a 2046-id doc plus its two delimiters is exactly one example
    CHECK(pack_pretrain({doc_of(2046)}, 2048, cfg).size() == 1);
    CHECK(pack_pretrain({}, 2048, cfg).empty());
}

TEST_CASE("pack_pretrain law on fuzzed doc lengths") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t n_docs = std::uniform_int_distribution<size_t>(0, 20)(rng);
        std::vector<TokenSequence> docs(n_docs);
        size_t total = 0;
        for (TokenSequence& doc : docs) {
            doc.cfg = cfg;
            doc.ids.assign(std::uniform_int_distribution<size_t>(0, 5000)(rng),
                           cfg.midi_base());
            total += doc.ids.size() + 2;
        }
        const auto packed = pack_pretrain(docs, 2048, cfg);
        CHECK(packed.size() == total / 2048);
        for (const TrainingExample& ex : packed) CHECK(ex.ids.size() == 2048);
    }
}

TEST_CASE("pretrain chunks decode leniently after dropping delimiters") {
    std::mt19937_64 rng(8);
    std::vector<TokenSequence> docs;
    for (int i = 0; i < 4; ++i) docs.push_back(encode(dense_notes(rng, 300, 90.0), cfg));
    const auto packed = pack_pretrain(docs, 2048, cfg);
    REQUIRE(!packed.empty());
    for (const TrainingExample& ex : packed) {
        TokenSequence body;
        body.cfg = cfg;
        for (uint32_t id : ex.ids)
            if (cfg.is_midi(id))
                body.ids.push_back(id);
        std::vector<std::string> warnings;
        const NoteSeq notes = decode(body, /*strict=*/false, &warnings);
        CHECK(!notes.empty());  // split triples at the edges surface as warnings only
    }
}

TEST_CASE("manifest parsing and its invariants") {
    const std::string good =
        R"({"midi_path": "a.mid", "split": "pretrain"})"
        "\n"
        R"({"midi_path": "b.mid", "caption": "calm piano", "split": "finetune"})"
        "\n";
    const Manifest manifest = parse_manifest(good);
    REQUIRE(manifest.entries.size() == 2);
    CHECK(manifest.entries[0].split == Split::Pretrain);
    CHECK(!manifest.entries[0].caption);
    CHECK(manifest.entries[1].caption == "calm piano");

    auto expect_bad = [](const std::string& text) {
        try {
            parse_manifest(text);
            FAIL_CHECK("expected BadManifest for: ", text);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::BadManifest);
        }
    };
    expect_bad(R"({"midi_path": "a.mid", "split": "pretrain"})"
               "\n"
               R"({"midi_path": "a.mid", "split": "pretrain"})");
    expect_bad(R"({"midi_path": "c.mid", "split": "finetune"})");  // caption missing
    expect_bad(R"({"midi_path": "d.mid", "split": "validation"})");
    expect_bad(R"(not json)");
    expect_bad(R"({"split": "pretrain"})");
}

TEST_CASE("run_augment triples the music token count and is reproducible") {
    TempDir dir("augment");
    std::mt19937_64 rng(9);
    std::string manifest_text;
    for (int i = 0; i < 3; ++i) {
        const std::string path = dir.file("piece" + std::to_string(i) + ".mid");
        spit(path, write_smf(dense_notes(rng, 40 + 10 * i, 80.0)));
        manifest_text += R"({"midi_path": ")" + path + R"(", "caption": "piece )" +
                         std::to_string(i) + R"(", "split": "finetune"})" + "\n";
    }
    const Manifest manifest = parse_manifest(manifest_text);

    const CorpusResult run1 = run_augment(manifest, 42, cfg, byte_tok, /*jobs=*/1);
    const CorpusResult run4 = run_augment(manifest, 42, cfg, byte_tok, /*jobs=*/4);
    const CorpusResult other = run_augment(manifest, 43, cfg, byte_tok, /*jobs=*/1);

    REQUIRE(run1.examples.size() == 9);  // one finetune + two infill per piece
    REQUIRE(run4.examples.size() == 9);
    for (size_t i = 0; i < run1.examples.size(); ++i) {
        CHECK(run1.examples[i].ids == run4.examples[i].ids);  // jobs cannot change output
        CHECK(run1.examples[i].kind == run4.examples[i].kind);
    }
    bool differs = false;
    for (size_t i = 0; i < run1.examples.size(); ++i)
        differs |= run1.examples[i].ids != other.examples[i].ids;
    CHECK(differs);

    size_t finetune_tokens = 0, all_tokens = 0;
    for (const TrainingExample& ex : run1.examples) {
        if (ex.kind == ExampleKind::Finetune)
            finetune_tokens += midi_token_count(ex);
        all_tokens += midi_token_count(ex);
        CHECK(ex.prefix_len <= kTextPrefixMax);
        CHECK(validate(midi_portion(ex)).ok);
    }
    CHECK(all_tokens == 3 * finetune_tokens);
}

TEST_CASE("run_augment skips sparse segments with a warning") {
    TempDir dir("sparse");
    const NoteSeq two = {{0.0, 0.5, 0, 60, 96}, {1.0, 0.5, 0, 62, 96}};
    spit(dir.file("two.mid"), write_smf(two));
    const Manifest manifest = parse_manifest(
        R"({"midi_path": ")" + dir.file("two.mid") + R"(", "caption": "x", "split": "finetune"})");
    const CorpusResult result = run_augment(manifest, 1, cfg, byte_tok);
    CHECK(result.examples.size() == 1);  // finetune survives, infill skipped
    CHECK(result.examples[0].kind == ExampleKind::Finetune);
    REQUIRE(result.warnings.size() == 1);
}

TEST_CASE("run_pack packs every pretrain segment in manifest order") {
    TempDir dir("pack");
    std::mt19937_64 rng(10);
    std::string manifest_text;
    for (int i = 0; i < 2; ++i) {
        const std::string path = dir.file("p" + std::to_string(i) + ".mid");
        spit(path, write_smf(dense_notes(rng, 400, 90.0)));
        manifest_text += R"({"midi_path": ")" + path + R"(", "split": "pretrain"})" + "\n";
    }
    const Manifest manifest = parse_manifest(manifest_text);
    const CorpusResult result = run_pack(manifest, 2048, cfg, 2);
    // 2 docs of 1200 tokens (+2 delimiters each) -> floor(2404 / 2048) = 1
    REQUIRE(result.examples.size() == 1);
    CHECK(result.examples[0].ids.size() == 2048);
}

TEST_CASE("example sets round-trip through the amtk+idx pair") {
    TempDir dir("exset");
    std::mt19937_64 rng(11);
    std::vector<TrainingExample> examples;
    examples.push_back(build_finetune_example("hello", dense_notes(rng, 10, 50.0), cfg, byte_tok));
    auto variants = build_infill_examples("hello", dense_notes(rng, 12, 60.0), rng, cfg, byte_tok);
    examples.push_back(variants[0]);
    examples.push_back(variants[1]);

    write_example_set(dir.path().string(), "set", examples, cfg);
    const auto back = read_example_set(dir.path().string(), "set");
    REQUIRE(back.size() == examples.size());
    for (size_t i = 0; i < examples.size(); ++i) {
        CHECK(back[i].ids == examples[i].ids);
        CHECK(back[i].prefix_len == examples[i].prefix_len);
        CHECK(back[i].kind == examples[i].kind);
    }
}
