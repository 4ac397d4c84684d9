#include "amtkit/cli.hpp"

#include <charconv>
#include <chrono>
#include <random>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "amtkit/codec.hpp"
#include "amtkit/dataset.hpp"
#include "amtkit/embedding.hpp"
#include "amtkit/midi.hpp"
#include "amtkit/ngram.hpp"
#include "amtkit/sampling.hpp"
#include "binio.hpp"

namespace amtkit {

namespace {

using nlohmann::json;

std::string shortest(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
    for (const std::string& w : warnings) err << "warning: " << w << "\n";
}

NoteSeq load_notes(const std::string& path, std::ostream& err) {
    ExtractReport report;
    const NoteSeq notes = extract_notes(parse_smf(binio::read_file(path)), &report);
    print_warnings(report.warnings, err);
    return notes;
}

struct BenchReport {
    double wall_clock_s = 0.0;
    double output_music_s = 0.0;
    double rtf = 0.0;
    double tokens_per_s = 0.0;
    int batch_size = 1;
};

void print_bench(const BenchReport& r, bool as_json, std::ostream& out) {
    if (as_json) {
        json obj = {{"wall_clock_s", r.wall_clock_s},
                    {"output_music_s", r.output_music_s},
                    {"rtf", r.rtf},
                    {"tokens_per_s", r.tokens_per_s},
                    {"batch_size", r.batch_size}};
        out << obj.dump() << "\n";
        return;
    }
    out << "wall_clock_s=" << shortest(r.wall_clock_s) << "\n"
        << "output_music_s=" << shortest(r.output_music_s) << "\n"
        << "rtf=" << shortest(r.rtf) << "\n"
        << "tokens_per_s=" << shortest(r.tokens_per_s) << "\n"
        << "batch_size=" << r.batch_size << "\n";
}

/// Music body of a generated stream: everything after the prompt, minus the
/// final EOS if generation stopped there.
TokenSequence generated_body(const TokenSequence& seq, size_t prompt_len) {
    TokenSequence body;
    body.cfg = seq.cfg;
    body.ids.assign(seq.ids.begin() + std::streamoff(prompt_len), seq.ids.end());
    if (!body.ids.empty() && body.ids.back() == body.cfg.eos_id)
        body.ids.pop_back();
    return body;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"arrival-time MIDI tokenization toolkit", "amtkit"};
    app.require_subcommand(1);

    VocabConfig cfg;

    // parse
    auto* cmd_parse = app.add_subcommand("parse", "print a MIDI file as note records");
    std::string parse_in;
    cmd_parse->add_option("input", parse_in, "input .mid")->required();

    // tokenize
    auto* cmd_tok = app.add_subcommand("tokenize", "encode a MIDI file as music tokens");
    std::string tok_in, tok_out;
    int tok_segment = -1;
    cmd_tok->add_option("input", tok_in, "input .mid")->required();
    cmd_tok->add_option("-o,--output", tok_out, "output .amtk")->required();
    cmd_tok->add_option("--segment", tok_segment, "which 100 s segment to encode");

    // detokenize
    auto* cmd_detok = app.add_subcommand("detokenize", "decode music tokens into a MIDI file");
    std::string detok_in, detok_out;
    bool detok_lenient = false;
    cmd_detok->add_option("input", detok_in, "input .amtk")->required();
    cmd_detok->add_option("-o,--output", detok_out, "output .mid")->required();
    cmd_detok->add_flag("--lenient", detok_lenient, "skip malformed stretches instead of failing");

    // validate
    auto* cmd_validate = app.add_subcommand("validate", "check a token file for decodability");
    std::string validate_in;
    bool validate_json = false;
    cmd_validate->add_option("input", validate_in, "input .amtk")->required();
    cmd_validate->add_flag("--json", validate_json, "emit a JSON report");

    // pack
    auto* cmd_pack = app.add_subcommand("pack", "build packed pretraining examples");
    std::string pack_manifest, pack_out;
    uint32_t pack_seqlen = kMidiSeqLen;
    int pack_jobs = 1;
    cmd_pack->add_option("--manifest", pack_manifest, "manifest (JSON lines)")->required();
    cmd_pack->add_option("--seqlen", pack_seqlen, "example length");
    cmd_pack->add_option("-o,--output", pack_out, "output directory")->required();
    cmd_pack->add_option("--jobs", pack_jobs, "worker threads");

    // augment
    auto* cmd_aug = app.add_subcommand("augment", "build finetuning examples with infilling");
    std::string aug_manifest, aug_out;
    uint64_t aug_seed = 0;
    int aug_jobs = 1;
    double aug_delta = InfillParams{}.delta;
    cmd_aug->add_option("--manifest", aug_manifest, "manifest (JSON lines)")->required();
    cmd_aug->add_option("--seed", aug_seed, "rng seed");
    cmd_aug->add_option("-o,--output", aug_out, "output directory")->required();
    cmd_aug->add_option("--jobs", aug_jobs, "worker threads");
    cmd_aug->add_option("--delta", aug_delta, "anticipation interval, seconds");

    // train-ngram
    auto* cmd_train = app.add_subcommand("train-ngram", "count an n-gram model from token files");
    std::vector<std::string> train_in;
    std::string train_out;
    int train_order = 3;
    cmd_train->add_option("--order", train_order, "model order");
    cmd_train->add_option("inputs", train_in, "input .amtk files")->required();
    cmd_train->add_option("-o,--output", train_out, "output model")->required();

    // generate
    auto* cmd_gen = app.add_subcommand("generate", "sample music from a model");
    std::string gen_model, gen_prompt, gen_out;
    double gen_top_p = 0.98;
    uint32_t gen_max_new = kMidiSeqLen;
    uint64_t gen_seed = 0;
    bool gen_unconstrained = false;
    cmd_gen->add_option("--model", gen_model, "NGRM model file")->required();
    cmd_gen->add_option("--prompt", gen_prompt, "text prompt");
    cmd_gen->add_option("--top-p", gen_top_p, "nucleus threshold");
    cmd_gen->add_option("--max-new", gen_max_new, "token budget");
    cmd_gen->add_option("--seed", gen_seed, "rng seed");
    cmd_gen->add_flag("--unconstrained", gen_unconstrained, "disable the grammar mask");
    cmd_gen->add_option("-o,--output", gen_out, "output .mid")->required();

    // expand-embeddings
    auto* cmd_emb = app.add_subcommand("expand-embeddings", "stack music rows under a text table");
    std::string emb_text, emb_music, emb_out;
    cmd_emb->add_option("text_table", emb_text, "text embedding table (EMB1)")->required();
    cmd_emb->add_option("music_table", emb_music, "music embedding table (EMB1)")->required();
    cmd_emb->add_option("-o,--output", emb_out, "output table")->required();

    // bench
    auto* cmd_bench = app.add_subcommand("bench", "measure generation speed");
    std::string bench_model;
    int bench_batch = 1, bench_runs = 1;
    double bench_top_p = 0.98;
    uint32_t bench_max_new = kMidiSeqLen;
    uint64_t bench_seed = 0;
    bool bench_json = false;
    cmd_bench->add_option("--model", bench_model, "NGRM model file")->required();
    cmd_bench->add_option("--batch", bench_batch, "sequences per run");
    cmd_bench->add_option("--runs", bench_runs, "number of runs");
    cmd_bench->add_option("--top-p", bench_top_p, "nucleus threshold");
    cmd_bench->add_option("--max-new", bench_max_new, "token budget per sequence");
    cmd_bench->add_option("--seed", bench_seed, "rng seed");
    cmd_bench->add_flag("--json", bench_json, "emit a JSON report");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());  // CLI11 convention
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*cmd_parse) {
            out << notes_to_text(load_notes(parse_in, err));
            return 0;
        }

        if (*cmd_tok) {
            const NoteSeq notes = load_notes(tok_in, err);
            const std::vector<Segment> segments = segment(notes);
            NoteSeq picked;
            if (tok_segment >= 0) {
                if (size_t(tok_segment) >= segments.size())
                    raise(Errc::OutOfRange, "file has " + std::to_string(segments.size()) +
                                                " segment(s), cannot take segment " +
                                                std::to_string(tok_segment));
                picked = segments[size_t(tok_segment)].notes;
            } else if (segments.size() > 1) {
                raise(Errc::OnsetOutOfRange,
                      "piece spans " + std::to_string(segments.size()) +
                          " segments of 100 s; pick one with --segment");
            } else if (!segments.empty()) {
                picked = segments.front().notes;
            }
            write_amtk(tok_out, encode(picked, cfg));
            return 0;
        }

        if (*cmd_detok) {
            const TokenSequence tokens = read_amtk(detok_in, cfg);
            std::vector<std::string> warnings;
            const NoteSeq notes = decode(tokens, !detok_lenient, &warnings);
            print_warnings(warnings, err);
            binio::write_file(detok_out, write_smf(notes));
            return 0;
        }

        if (*cmd_validate) {
            const ValidationReport report = validate(read_amtk(validate_in, cfg));
            if (validate_json) {
                json violations = json::array();
                for (const Violation& v : report.violations)
                    violations.push_back(
                        {{"position", v.position}, {"kind", violation_name(v.kind)}});
                out << json{{"ok", report.ok}, {"violations", violations}}.dump() << "\n";
            } else {
                out << "ok=" << (report.ok ? "true" : "false") << "\n";
                for (const Violation& v : report.violations)
                    out << "violation=" << violation_name(v.kind) << " position=" << v.position
                        << "\n";
            }
            return report.ok ? 0 : 1;
        }

        if (*cmd_pack) {
            const CorpusResult result =
                run_pack(read_manifest(pack_manifest), pack_seqlen, cfg, pack_jobs);
            print_warnings(result.warnings, err);
            write_example_set(pack_out, "pretrain", result.examples, cfg);
            out << "examples=" << result.examples.size() << "\n";
            return 0;
        }

        if (*cmd_aug) {
            InfillParams params;
            params.delta = aug_delta;
            const ByteTokenizer tok;
            const CorpusResult result =
                run_augment(read_manifest(aug_manifest), aug_seed, cfg, tok, aug_jobs, params);
            print_warnings(result.warnings, err);
            write_example_set(aug_out, "finetune", result.examples, cfg);
            out << "examples=" << result.examples.size() << "\n";
            return 0;
        }

        if (*cmd_train) {
            std::vector<TokenSequence> corpus;
            corpus.reserve(train_in.size());
            for (const std::string& path : train_in) corpus.push_back(read_amtk(path, cfg));
            train_ngram(corpus, train_order).save(train_out);
            return 0;
        }

        if (*cmd_gen) {
            const NGramModel model = NGramModel::load(gen_model, cfg);
            const ByteTokenizer tok;
            std::vector<uint32_t> prompt = tokenize_text(gen_prompt, tok);
            if (!prompt.empty())
                prompt.push_back(model.vocab().separator_id);
            GenerateOptions options;
            options.top_p = gen_top_p;
            options.max_new = gen_max_new;
            options.constrained = !gen_unconstrained;
            std::mt19937_64 rng(gen_seed);
            const TokenSequence seq = generate(model, prompt, options, rng, model.vocab());
            std::vector<std::string> warnings;
            const TokenSequence body = generated_body(seq, prompt.size());
            const NoteSeq notes = decode(body, options.constrained, &warnings);
            print_warnings(warnings, err);
            binio::write_file(gen_out, write_smf(notes));
            out << "tokens=" << body.ids.size() << " notes=" << notes.size() << "\n";
            return 0;
        }

        if (*cmd_emb) {
            write_emb1(emb_out, expand_embeddings(read_emb1(emb_text), read_emb1(emb_music)));
            return 0;
        }

        if (*cmd_bench) {
            const NGramModel model = NGramModel::load(bench_model, cfg);
            GenerateOptions options;
            options.top_p = bench_top_p;
            options.max_new = bench_max_new;
            std::mt19937_64 rng(bench_seed);

            BenchReport report;
            report.batch_size = bench_batch;
            uint64_t tokens = 0;
            const auto start = std::chrono::steady_clock::now();
            for (int run = 0; run < bench_runs; ++run)
                for (int b = 0; b < bench_batch; ++b) {
                    const TokenSequence seq = generate(model, {}, options, rng, model.vocab());
                    tokens += seq.ids.size();
                    const NoteSeq notes = decode(generated_body(seq, 0), /*strict=*/true);
                    if (!notes.empty())
                        report.output_music_s += notes.back().onset + notes.back().duration;
                }
            const auto stop = std::chrono::steady_clock::now();
            report.wall_clock_s = std::chrono::duration<double>(stop - start).count();
            report.rtf = report.output_music_s / report.wall_clock_s;
            report.tokens_per_s = double(tokens) / report.wall_clock_s;
            print_bench(report, bench_json, out);
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace amtkit
