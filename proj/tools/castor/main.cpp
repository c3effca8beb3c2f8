// castor: one entry point for the whole pipeline.
//
//   build-dataset  raw post dump -> filtered, cleaned, tag-balanced sample
//   make-triplets  posts + generation backend -> triplet file
//   split          triplet file -> train/validation/test files
//   train          train/val triplets -> vocabulary + checkpoint
//   evaluate       checkpoint + test triplets -> metrics report
//   detect         checkpoint + answer pair(s) -> verdicts
//   attack         triplet file -> adversarially perturbed triplet file
//   report         saved report document -> rendered report
//
// Results go to stdout as machine-readable lines; diagnostics go to stderr.
// Exit codes: 0 success, 1 validation errors, 2 runtime errors.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "castor/corpus.hpp"
#include "castor/detector.hpp"
#include "castor/evalkit.hpp"
#include "castor/generation.hpp"
#include "castor/promptgen.hpp"
#include "castor/run_config.hpp"
#include "castor/siamese.hpp"
#include "castor/tokenizer.hpp"
#include "json.hpp"

namespace {

using namespace castor;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

template <typename T>
void apply_opt(const std::optional<T>& src, T& dst) {
    if (src) dst = *src;
}

void apply_date(const std::optional<std::string>& src, Date& dst) {
    if (src) dst = Date::parse(*src);
}

const std::string& require_path(const std::string& value, const char* what) {
    if (value.empty()) {
        throw std::invalid_argument(std::string("no path given for ") + what +
                                    " (set it via flag or config file)");
    }
    return value;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out << content;
    if (!out.flush()) throw IoError("failed writing file: " + path);
}

std::vector<double> parse_ratio_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            double v = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument("");
            out.push_back(v);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad ratio '" + item + "' in '" + text + "'");
        }
    }
    return out;
}

std::vector<std::size_t> parse_boundary_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            long long v = std::stoll(item, &used);
            if (used != item.size() || v < 0) throw std::invalid_argument("");
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw std::invalid_argument("bad boundary '" + item + "' in '" + text + "'");
        }
    }
    return out;
}

RunConfig resolve_config(const std::string& config_path) {
    if (config_path.empty()) return default_run_config();
    return load_run_config(config_path);
}

// Reproducibility banner: the full resolved configuration (the credential
// lives only in the environment and is never echoed).
void banner(const std::string& subcommand, const RunConfig& cfg) {
    std::cerr << "[castor] subcommand " << subcommand << "\n";
    std::cerr << "[castor] config "
              << json::parse(run_config_to_json_text(cfg)).dump() << "\n";
    const char* key = std::getenv(kApiKeyEnvVar);
    std::cerr << "[castor] " << kApiKeyEnvVar << " "
              << ((key != nullptr && *key != '\0') ? "<redacted>" : "<unset>") << "\n";
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// Shared flag bundles
// ---------------------------------------------------------------------------

struct BackendFlags {
    std::optional<std::string> kind;
    std::optional<std::string> endpoint;
    std::optional<std::string> model;
    std::optional<double> timeout;
    std::optional<int> max_retries;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--backend", kind, "Generation backend: stub or remote");
        cmd->add_option("--endpoint", endpoint, "Remote chat-completion URL");
        cmd->add_option("--model", model, "Remote model name");
        cmd->add_option("--timeout", timeout, "Remote request timeout in seconds");
        cmd->add_option("--max-retries", max_retries, "Remote retry limit");
    }

    void apply_to(GenerationBackend& backend) const {
        if (kind) backend.kind = backend_kind_from_string(*kind);
        apply_opt(endpoint, backend.endpoint);
        apply_opt(model, backend.model_name);
        apply_opt(timeout, backend.timeout_seconds);
        apply_opt(max_retries, backend.max_retries);
    }
};

struct EncoderFlags {
    std::optional<std::size_t> vocab_size, d_model, num_heads, num_layers, block_size;
    std::optional<std::size_t> window_blocks, random_blocks, global_blocks, max_len;
    std::optional<std::size_t> ffn_multiplier;
    std::optional<std::uint64_t> pattern_seed;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--vocab-size", vocab_size, "Vocabulary capacity (embedding rows)");
        cmd->add_option("--d-model", d_model, "Model width");
        cmd->add_option("--num-heads", num_heads, "Attention heads");
        cmd->add_option("--num-layers", num_layers, "Encoder layers");
        cmd->add_option("--block-size", block_size, "Attention block size in tokens");
        cmd->add_option("--window-blocks", window_blocks, "Sliding window width in blocks (odd)");
        cmd->add_option("--random-blocks", random_blocks, "Random blocks per row");
        cmd->add_option("--global-blocks", global_blocks, "Leading global blocks");
        cmd->add_option("--max-len", max_len, "Token cap (multiple of block size)");
        cmd->add_option("--ffn-multiplier", ffn_multiplier, "Feed-forward width multiplier");
        cmd->add_option("--pattern-seed", pattern_seed, "Random-block pattern seed");
    }

    void apply_to(EncoderConfig& enc) const {
        apply_opt(vocab_size, enc.vocab_size);
        apply_opt(d_model, enc.d_model);
        apply_opt(num_heads, enc.num_heads);
        apply_opt(num_layers, enc.num_layers);
        apply_opt(block_size, enc.block_size);
        apply_opt(window_blocks, enc.window_blocks);
        apply_opt(random_blocks, enc.num_random_blocks);
        apply_opt(global_blocks, enc.num_global_blocks);
        apply_opt(max_len, enc.max_len);
        apply_opt(ffn_multiplier, enc.ffn_multiplier);
        apply_opt(pattern_seed, enc.pattern_seed);
    }
};

struct AttackFlags {
    std::optional<std::string> kind;
    std::optional<std::size_t> budget;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> lexicon;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--kind", kind, "Attack kind: char-perturb or synonym-sub");
        cmd->add_option("--budget", budget, "Maximum words modified per answer");
        cmd->add_option("--attack-seed", seed, "Attack RNG seed");
        cmd->add_option("--lexicon", lexicon, "Synonym lexicon file (word TAB syn[,syn...])");
    }

    void apply_to(AttackSpec& spec) const {
        if (kind) spec.kind = attack_kind_from_string(*kind);
        apply_opt(budget, spec.budget);
        apply_opt(seed, spec.seed);
        apply_opt(lexicon, spec.lexicon_path);
    }
};

// Loads the checkpoint+vocab pair behind every inference subcommand.  When no
// explicit vocab path is given, the checkpoint's recorded path is used and its
// recorded content hash is enforced.
Detector make_detector(const std::string& checkpoint_path,
                       const std::optional<std::string>& vocab_override) {
    ModelCheckpoint ckpt = load_checkpoint(require_path(checkpoint_path, "--checkpoint"));
    std::string vocab_path = vocab_override.value_or(ckpt.vocab_path);
    if (vocab_path.empty()) {
        throw std::invalid_argument(
            "checkpoint records no vocabulary path; pass --vocab");
    }
    if (!vocab_override && !ckpt.vocab_sha256.empty()) {
        std::string actual = file_sha256(vocab_path);
        if (actual != ckpt.vocab_sha256) {
            throw IoError("vocabulary file " + vocab_path +
                          " does not match the checkpoint (expected sha256 " +
                          ckpt.vocab_sha256 + ", found " + actual + ")");
        }
    }
    Vocab vocab = Vocab::load(vocab_path);
    return Detector(std::move(ckpt), std::move(vocab));
}

// ---------------------------------------------------------------------------
// Report re-rendering (parse the saved JSON document back into reports)
// ---------------------------------------------------------------------------

MetricsReport report_from_json(const json& j) {
    MetricsReport r;
    auto metric = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j.at(key).is_string()) return std::nullopt;
        return j.at(key).get<double>();
    };
    r.accuracy = metric("accuracy");
    r.precision = metric("precision");
    r.recall = metric("recall");
    r.f1 = metric("f1");
    const json& cm = j.at("confusion");
    r.confusion.tp = cm.at("tp").get<std::size_t>();
    r.confusion.fp = cm.at("fp").get<std::size_t>();
    r.confusion.fn = cm.at("fn").get<std::size_t>();
    r.confusion.tn = cm.at("tn").get<std::size_t>();
    if (j.contains("buckets")) {
        for (const json& b : j.at("buckets")) {
            r.buckets.emplace_back(b.at("bucket").get<std::string>(), report_from_json(b));
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int run_build_dataset(const RunConfig& cfg) {
    std::vector<PostRecord> raw = read_post_dump(require_path(cfg.paths.dump, "--in"));
    std::vector<PostRecord> kept = filter_posts(raw, cfg.filter);

    std::vector<PostRecord> cleaned;
    cleaned.reserve(kept.size());
    std::size_t dropped_empty = 0;
    for (PostRecord post : kept) {
        post.title = clean_text(post.title);
        post.body_html = clean_text(post.body_html);
        post.answer_html = clean_text(post.answer_html);
        if (post.answer_html.empty() || post.body_html.empty()) {
            ++dropped_empty;
            continue;
        }
        cleaned.push_back(std::move(post));
    }

    std::vector<PostRecord> sampled =
        balanced_sample(cleaned, cfg.sampling.size, cfg.sampling.seed);
    write_post_dump(sampled, require_path(cfg.paths.posts, "--out"));

    std::cout << "read\t" << raw.size() << "\n"
              << "filtered\t" << kept.size() << "\n"
              << "dropped_empty\t" << dropped_empty << "\n"
              << "sampled\t" << sampled.size() << "\n"
              << "out\t" << cfg.paths.posts << "\n";
    return 0;
}

int run_make_triplets(const RunConfig& cfg) {
    std::vector<PostRecord> posts = read_post_dump(require_path(cfg.paths.posts, "--in"));

    // One seeded stream drives all per-post draws, in a fixed order per post:
    // generation length, tone coin, then the post's augmentation seed.
    RandomEngine rng(cfg.augment.seed);
    std::vector<TripletRecord> triplets;
    triplets.reserve(posts.size());
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < posts.size(); ++i) {
        const PostRecord& post = posts[i];
        PromptVariant variant = assign_variant(i, posts.size());
        int max_len = sample_max_length(rng);
        bool tone = rng.uniform_real() < cfg.augment.tone_probability;
        AugmentConfig per_post = cfg.augment;
        per_post.seed = rng.next_u64();

        std::string title = clean_text(post.title);
        std::string body = clean_text(post.body_html);
        std::string human = clean_text(post.answer_html);
        if (human.empty()) {
            ++skipped;
            std::cerr << "[castor] skipping post " << post.question_id
                      << ": answer is empty after cleaning\n";
            continue;
        }

        PromptRequest ref_req{title, body, PromptKind::Reference, 1000, false};
        std::string reference = generate(cfg.backend, render_prompt(ref_req), 1000);

        PromptRequest ai_req{title, body, prompt_kind_of(variant), max_len, tone};
        std::string ai_raw = generate(cfg.backend, render_prompt(ai_req), max_len);
        std::string ai = postprocess_answer(ai_raw, per_post);

        TripletRecord t;
        t.question_id = post.question_id;
        t.question_title = std::move(title);
        t.question_body = std::move(body);
        t.human_answer = std::move(human);
        t.reference_answer = std::move(reference);
        t.ai_answer = std::move(ai);
        t.prompt_variant = variant;
        t.max_length_tokens = max_len;
        t.tags = post.tags;
        triplets.push_back(std::move(t));
    }

    write_triplets(triplets, require_path(cfg.paths.triplets, "--out"));
    std::cout << "posts\t" << posts.size() << "\n"
              << "skipped\t" << skipped << "\n"
              << "triplets\t" << triplets.size() << "\n"
              << "out\t" << cfg.paths.triplets << "\n";
    return 0;
}

int run_split(const RunConfig& cfg) {
    std::vector<TripletRecord> triplets =
        read_triplets(require_path(cfg.paths.triplets, "--in"));
    DatasetSplit split = split_dataset(triplets, cfg.split.ratios, cfg.split.seed);
    write_triplets(split.train, require_path(cfg.paths.train_split, "--out-train"));
    write_triplets(split.validation, require_path(cfg.paths.val_split, "--out-val"));
    write_triplets(split.test, require_path(cfg.paths.test_split, "--out-test"));
    std::cout << "total\t" << triplets.size() << "\n"
              << "train\t" << split.train.size() << "\n"
              << "validation\t" << split.validation.size() << "\n"
              << "test\t" << split.test.size() << "\n";
    return 0;
}

int run_train(const RunConfig& cfg) {
    std::vector<TripletRecord> train_set =
        read_triplets(require_path(cfg.paths.train_split, "--train"));
    std::vector<TripletRecord> val_set =
        read_triplets(require_path(cfg.paths.val_split, "--val"));

    std::vector<std::string> corpus;
    corpus.reserve(train_set.size() * 3);
    for (const TripletRecord& t : train_set) {
        corpus.push_back(t.reference_answer);
        corpus.push_back(t.ai_answer);
        corpus.push_back(t.human_answer);
    }
    Vocab vocab = build_vocab(corpus, cfg.train.encoder.vocab_size, cfg.vocab.min_freq);
    const std::string& vocab_path = require_path(cfg.paths.vocab, "--vocab-out");
    vocab.save(vocab_path);
    std::cerr << "[castor] vocabulary: " << vocab.size() << " tokens -> " << vocab_path
              << "\n";

    // The embedding table is sized by the vocabulary that was actually built;
    // the configured vocab_size is its upper bound.
    TrainConfig tc = cfg.train;
    tc.encoder.vocab_size = vocab.size();

    DatasetSplit split;
    split.train = std::move(train_set);
    split.validation = std::move(val_set);

    TrainResult result = train(split, tc, vocab, vocab_path, &std::cerr);
    const std::string& ckpt_path = require_path(cfg.paths.checkpoint, "--checkpoint-out");
    save_checkpoint(result.checkpoint, ckpt_path);

    std::cout << "epochs\t" << result.history.epochs.size() << "\n"
              << "best_epoch\t" << result.history.best_epoch << "\n"
              << "best_val_loss\t" << format_double(result.checkpoint.best_val_loss)
              << "\n"
              << "stopped\t"
              << (result.history.stop_reason == StopReason::EarlyStopped ? "early"
                                                                         : "max-epochs")
              << "\n"
              << "vocab\t" << vocab_path << "\n"
              << "checkpoint\t" << ckpt_path << "\n";
    return 0;
}

int run_evaluate(const RunConfig& cfg, const std::optional<std::string>& vocab_override,
                 const std::string& buckets_text, const std::string& format) {
    Detector detector = make_detector(cfg.paths.checkpoint, vocab_override);
    std::vector<TripletRecord> test =
        read_triplets(require_path(cfg.paths.test_split, "--test"));

    std::vector<std::size_t> boundaries = kDefaultBucketBoundaries;
    if (!buckets_text.empty()) boundaries = parse_boundary_list(buckets_text);

    MetricsReport report = evaluate(detector, test, cfg.threshold, boundaries);
    if (format == "json") {
        std::cout << render_json(report) << "\n";
    } else {
        std::cout << render_flat(report);
    }
    if (!cfg.paths.report.empty()) {
        write_text_file(cfg.paths.report, render_json(report) + "\n");
        std::cerr << "[castor] report saved to " << cfg.paths.report << "\n";
    }
    return 0;
}

int run_detect(const RunConfig& cfg, const std::optional<std::string>& vocab_override,
               const std::string& reference_path, const std::string& candidate_path,
               const std::string& pairs_path) {
    bool single = !reference_path.empty() || !candidate_path.empty();
    bool batch = !pairs_path.empty();
    if (single == batch) {
        throw std::invalid_argument(
            "pass either --reference and --candidate, or --pairs");
    }
    Detector detector = make_detector(cfg.paths.checkpoint, vocab_override);

    if (single) {
        if (reference_path.empty() || candidate_path.empty()) {
            throw std::invalid_argument("--reference and --candidate go together");
        }
        Verdict v = detector.detect(read_text_file(reference_path),
                                    read_text_file(candidate_path), cfg.threshold);
        std::cout << "similarity\t" << format_double(v.similarity) << "\n"
                  << "label\t" << to_string(v.label) << "\n"
                  << "threshold\t" << format_double(v.threshold_used) << "\n"
                  << "candidate_tokens\t" << v.candidate_token_length << "\n";
        return 0;
    }

    std::vector<DetectPair> pairs = read_detect_pairs(pairs_path);
    std::vector<std::pair<std::string, std::string>> texts;
    texts.reserve(pairs.size());
    for (const DetectPair& p : pairs) {
        texts.emplace_back(p.reference_answer, p.candidate_answer);
    }
    std::vector<BatchItem> items = detector.detect_batch(texts, cfg.threshold);
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].verdict) {
            const Verdict& v = *items[i].verdict;
            std::cout << i << "\tok\t" << format_double(v.similarity) << "\t"
                      << to_string(v.label) << "\t" << v.candidate_token_length << "\n";
        } else {
            std::cout << i << "\terror\t" << items[i].error << "\n";
        }
    }
    return 0;
}

int run_attack(const RunConfig& cfg, const std::optional<std::string>& vocab_override,
               const std::string& in_path, const std::string& out_path) {
    std::vector<TripletRecord> triplets = read_triplets(require_path(in_path, "--in"));
    cfg.attack.validate();

    std::optional<Detector> detector;
    if (cfg.attack.kind == AttackKind::SynonymSub) {
        require_path(cfg.attack.lexicon_path, "--lexicon");
        detector = make_detector(cfg.paths.checkpoint, vocab_override);
    }

    // Per-item seeds are spec.seed + index, matching the robustness evaluation.
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        AttackSpec item = cfg.attack;
        item.seed = cfg.attack.seed + i;
        if (item.kind == AttackKind::CharPerturb) {
            triplets[i].ai_answer = attack_char_perturb(triplets[i].ai_answer, item);
        } else {
            triplets[i].ai_answer = attack_synonym_sub(
                triplets[i].ai_answer, item, *detector, triplets[i].reference_answer);
        }
    }
    write_triplets(triplets, require_path(out_path, "--out"));
    std::cout << "attacked\t" << triplets.size() << "\n"
              << "kind\t" << to_string(cfg.attack.kind) << "\n"
              << "budget\t" << cfg.attack.budget << "\n"
              << "out\t" << out_path << "\n";
    return 0;
}

int run_report(const std::string& in_path, const std::string& format) {
    json doc = json::parse(read_text_file(require_path(in_path, "--in")), nullptr,
                           /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
        throw SchemaError(0, "<document>", "report file is not valid JSON");
    }
    if (doc.contains("clean") && doc.contains("attacked")) {
        MetricsReport clean = report_from_json(doc.at("clean"));
        MetricsReport attacked = report_from_json(doc.at("attacked"));
        if (format == "json") {
            std::cout << render_robustness_json(clean, attacked) << "\n";
        } else {
            std::cout << render_robustness_flat(clean, attacked);
        }
    } else {
        MetricsReport report = report_from_json(doc);
        if (format == "json") {
            std::cout << render_json(report) << "\n";
        } else {
            std::cout << render_flat(report);
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pipeline for training and evaluating a machine-text detector "
                 "on question-answer corpora"};
    app.require_subcommand(1);
    app.fallthrough();  // lets --config appear after the subcommand name too
    std::string config_path;
    app.add_option("--config", config_path,
                   "JSON run-config file; explicit flags override its values");

    // --- build-dataset ---
    auto* cmd_build = app.add_subcommand(
        "build-dataset", "Filter, clean, and sample a raw post dump");
    std::optional<std::string> bd_in, bd_out, bd_from, bd_to;
    std::optional<std::size_t> bd_size;
    std::optional<std::uint64_t> bd_seed;
    std::optional<int> bd_min_rep, bd_min_up;
    std::optional<bool> bd_accepted;
    cmd_build->add_option("--in", bd_in, "Raw post dump (one record per line)");
    cmd_build->add_option("--out", bd_out, "Output posts file");
    cmd_build->add_option("--size", bd_size, "Sample size");
    cmd_build->add_option("--seed", bd_seed, "Sampling seed");
    cmd_build->add_option("--min-reputation", bd_min_rep, "Answerer reputation floor (strict >)");
    cmd_build->add_option("--min-upvotes", bd_min_up, "Question/answer score floor (strict >)");
    cmd_build->add_option("--require-accepted", bd_accepted, "Keep only accepted answers");
    cmd_build->add_option("--date-from", bd_from, "Earliest creation date (YYYY-MM-DD)");
    cmd_build->add_option("--date-to", bd_to, "Latest creation date (YYYY-MM-DD)");

    // --- make-triplets ---
    auto* cmd_triplets = app.add_subcommand(
        "make-triplets", "Generate reference and machine answers for each post");
    std::optional<std::string> mt_in, mt_out;
    std::optional<std::uint64_t> mt_seed;
    std::optional<double> mt_filler_p, mt_tone_p;
    BackendFlags mt_backend;
    cmd_triplets->add_option("--in", mt_in, "Posts file from build-dataset");
    cmd_triplets->add_option("--out", mt_out, "Output triplet file");
    mt_backend.add_to(cmd_triplets);
    cmd_triplets->add_option("--augment-seed", mt_seed, "Augmentation RNG seed");
    cmd_triplets->add_option("--filler-probability", mt_filler_p,
                             "Per-sentence filler insertion probability");
    cmd_triplets->add_option("--tone-probability", mt_tone_p,
                             "Per-post probability of asking for a human tone");

    // --- split ---
    auto* cmd_split = app.add_subcommand("split", "Split a triplet file into train/val/test");
    std::optional<std::string> sp_in, sp_train, sp_val, sp_test, sp_ratios;
    std::optional<std::uint64_t> sp_seed;
    cmd_split->add_option("--in", sp_in, "Triplet file");
    cmd_split->add_option("--out-train", sp_train, "Train split output");
    cmd_split->add_option("--out-val", sp_val, "Validation split output");
    cmd_split->add_option("--out-test", sp_test, "Test split output");
    cmd_split->add_option("--ratios", sp_ratios, "Comma-separated train,val,test ratios");
    cmd_split->add_option("--seed", sp_seed, "Shuffle seed");

    // --- train ---
    auto* cmd_train = app.add_subcommand("train", "Train the siamese encoder");
    std::optional<std::string> tr_train, tr_val, tr_vocab, tr_ckpt;
    std::optional<double> tr_margin, tr_lr;
    std::optional<std::size_t> tr_epochs, tr_patience, tr_batch, tr_min_freq;
    std::optional<std::uint64_t> tr_seed;
    EncoderFlags tr_encoder;
    cmd_train->add_option("--train", tr_train, "Train triplet file");
    cmd_train->add_option("--val", tr_val, "Validation triplet file");
    cmd_train->add_option("--vocab-out", tr_vocab, "Vocabulary output path");
    cmd_train->add_option("--checkpoint-out", tr_ckpt, "Checkpoint output path");
    cmd_train->add_option("--margin", tr_margin, "Triplet-loss margin");
    cmd_train->add_option("--lr", tr_lr, "Learning rate");
    cmd_train->add_option("--max-epochs", tr_epochs, "Epoch cap");
    cmd_train->add_option("--patience", tr_patience, "Early-stopping patience");
    cmd_train->add_option("--batch-size", tr_batch, "Triplets per optimizer step");
    cmd_train->add_option("--seed", tr_seed, "Training seed");
    cmd_train->add_option("--min-freq", tr_min_freq, "Vocabulary frequency floor");
    tr_encoder.add_to(cmd_train);

    // --- evaluate ---
    auto* cmd_eval = app.add_subcommand("evaluate", "Score a checkpoint on a test split");
    std::optional<std::string> ev_ckpt, ev_vocab, ev_test, ev_report;
    std::optional<double> ev_threshold;
    std::string ev_buckets, ev_format = "flat";
    cmd_eval->add_option("--checkpoint", ev_ckpt, "Trained checkpoint");
    cmd_eval->add_option("--vocab", ev_vocab, "Vocabulary override (default: recorded path)");
    cmd_eval->add_option("--test", ev_test, "Test triplet file");
    cmd_eval->add_option("--threshold", ev_threshold, "Similarity decision threshold");
    cmd_eval->add_option("--buckets", ev_buckets, "Comma-separated token-length boundaries");
    cmd_eval->add_option("--format", ev_format, "Output format: flat or json")
        ->check(CLI::IsMember({"flat", "json"}));
    cmd_eval->add_option("--report-out", ev_report, "Also save the JSON report here");

    // --- detect ---
    auto* cmd_detect = app.add_subcommand("detect", "Judge answer pair(s) with a checkpoint");
    std::optional<std::string> dt_ckpt, dt_vocab;
    std::optional<double> dt_threshold;
    std::string dt_reference, dt_candidate, dt_pairs;
    cmd_detect->add_option("--checkpoint", dt_ckpt, "Trained checkpoint");
    cmd_detect->add_option("--vocab", dt_vocab, "Vocabulary override (default: recorded path)");
    cmd_detect->add_option("--threshold", dt_threshold, "Similarity decision threshold");
    cmd_detect->add_option("--reference", dt_reference, "Reference answer text file");
    cmd_detect->add_option("--candidate", dt_candidate, "Candidate answer text file");
    cmd_detect->add_option("--pairs", dt_pairs, "Batch file (one reference/candidate record per line)");

    // --- attack ---
    auto* cmd_attack = app.add_subcommand(
        "attack", "Write a triplet file with adversarially perturbed machine answers");
    std::optional<std::string> at_ckpt, at_vocab;
    std::string at_in, at_out;
    AttackFlags at_flags;
    cmd_attack->add_option("--in", at_in, "Triplet file to attack");
    cmd_attack->add_option("--out", at_out, "Attacked triplet file");
    at_flags.add_to(cmd_attack);
    cmd_attack->add_option("--checkpoint", at_ckpt, "Checkpoint (synonym-sub saliency)");
    cmd_attack->add_option("--vocab", at_vocab, "Vocabulary override (default: recorded path)");

    // --- report ---
    auto* cmd_report = app.add_subcommand("report", "Render a saved report document");
    std::string rp_in, rp_format = "flat";
    cmd_report->add_option("--in", rp_in, "Saved JSON report file");
    cmd_report->add_option("--format", rp_format, "Output format: flat or json")
        ->check(CLI::IsMember({"flat", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the offending flag to stderr
        return 1;
    }

    try {
        RunConfig cfg = resolve_config(config_path);

        if (cmd_build->parsed()) {
            apply_opt(bd_in, cfg.paths.dump);
            apply_opt(bd_out, cfg.paths.posts);
            apply_opt(bd_size, cfg.sampling.size);
            apply_opt(bd_seed, cfg.sampling.seed);
            apply_opt(bd_min_rep, cfg.filter.min_reputation);
            apply_opt(bd_min_up, cfg.filter.min_upvotes);
            apply_opt(bd_accepted, cfg.filter.require_accepted);
            apply_date(bd_from, cfg.filter.date_from);
            apply_date(bd_to, cfg.filter.date_to);
            cfg.validate();
            banner("build-dataset", cfg);
            return run_build_dataset(cfg);
        }
        if (cmd_triplets->parsed()) {
            apply_opt(mt_in, cfg.paths.posts);
            apply_opt(mt_out, cfg.paths.triplets);
            mt_backend.apply_to(cfg.backend);
            apply_opt(mt_seed, cfg.augment.seed);
            apply_opt(mt_filler_p, cfg.augment.filler_probability);
            apply_opt(mt_tone_p, cfg.augment.tone_probability);
            cfg.validate();
            banner("make-triplets", cfg);
            return run_make_triplets(cfg);
        }
        if (cmd_split->parsed()) {
            apply_opt(sp_in, cfg.paths.triplets);
            apply_opt(sp_train, cfg.paths.train_split);
            apply_opt(sp_val, cfg.paths.val_split);
            apply_opt(sp_test, cfg.paths.test_split);
            if (sp_ratios) {
                std::vector<double> r = parse_ratio_list(*sp_ratios);
                if (r.size() != 3) {
                    throw std::invalid_argument("--ratios needs exactly three values");
                }
                cfg.split.ratios = {r[0], r[1], r[2]};
            }
            apply_opt(sp_seed, cfg.split.seed);
            cfg.validate();
            banner("split", cfg);
            return run_split(cfg);
        }
        if (cmd_train->parsed()) {
            apply_opt(tr_train, cfg.paths.train_split);
            apply_opt(tr_val, cfg.paths.val_split);
            apply_opt(tr_vocab, cfg.paths.vocab);
            apply_opt(tr_ckpt, cfg.paths.checkpoint);
            apply_opt(tr_margin, cfg.train.margin);
            apply_opt(tr_lr, cfg.train.learning_rate);
            apply_opt(tr_epochs, cfg.train.max_epochs);
            apply_opt(tr_patience, cfg.train.patience);
            apply_opt(tr_batch, cfg.train.batch_size);
            apply_opt(tr_seed, cfg.train.seed);
            apply_opt(tr_min_freq, cfg.vocab.min_freq);
            tr_encoder.apply_to(cfg.train.encoder);
            cfg.validate();
            banner("train", cfg);
            return run_train(cfg);
        }
        if (cmd_eval->parsed()) {
            apply_opt(ev_ckpt, cfg.paths.checkpoint);
            apply_opt(ev_test, cfg.paths.test_split);
            apply_opt(ev_report, cfg.paths.report);
            apply_opt(ev_threshold, cfg.threshold);
            cfg.validate();
            banner("evaluate", cfg);
            return run_evaluate(cfg, ev_vocab, ev_buckets, ev_format);
        }
        if (cmd_detect->parsed()) {
            apply_opt(dt_ckpt, cfg.paths.checkpoint);
            apply_opt(dt_threshold, cfg.threshold);
            cfg.validate();
            banner("detect", cfg);
            return run_detect(cfg, dt_vocab, dt_reference, dt_candidate, dt_pairs);
        }
        if (cmd_attack->parsed()) {
            apply_opt(at_ckpt, cfg.paths.checkpoint);
            at_flags.apply_to(cfg.attack);
            cfg.validate();
            banner("attack", cfg);
            return run_attack(cfg, at_vocab, at_in, at_out);
        }
        if (cmd_report->parsed()) {
            banner("report", cfg);
            return run_report(rp_in, rp_format);
        }
        std::cerr << "error: no subcommand selected\n";
        return 1;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const BadRatios& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const TooFewRecords& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const SampleTooLarge& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const AuthMissing& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const LexiconMissing& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
