#include <doctest.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "castor/detector.hpp"
#include "castor/evalkit.hpp"
#include "castor/random.hpp"
#include "castor/siamese.hpp"
#include "castor/text_util.hpp"
#include "castor/tokenizer.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace castor;
using testsupport::TempDir;
using testsupport::write_text;

namespace {

// Detector over a small fixed vocabulary with deterministic untrained
// weights; evaluation and attack mechanics do not need a trained model.
struct EvalFixture {
    Vocab vocab;
    ModelCheckpoint ckpt;

    EvalFixture() {
        for (const char* w :
             {"alpha", "beta", "gamma", "delta", "one", "two", "three", "four", "hello",
              "world", "text", "question", "answer", "code", "value", "thing"}) {
            vocab.add_token(w);
        }
        ckpt.encoder_cfg.vocab_size = vocab.size();
        ckpt.encoder_cfg.d_model = 16;
        ckpt.encoder_cfg.num_heads = 2;
        ckpt.encoder_cfg.num_layers = 1;
        ckpt.encoder_cfg.block_size = 4;
        ckpt.encoder_cfg.window_blocks = 3;
        ckpt.encoder_cfg.num_random_blocks = 1;
        ckpt.encoder_cfg.num_global_blocks = 1;
        ckpt.encoder_cfg.max_len = 32;
        ckpt.encoder_cfg.ffn_multiplier = 2;
        ckpt.train_cfg.encoder = ckpt.encoder_cfg;
        ckpt.params = init_encoder<float>(ckpt.encoder_cfg, 4321);
    }

    Detector make() const { return Detector(ckpt, vocab); }

    std::vector<TripletRecord> small_test() const {
        TripletRecord t1;
        t1.question_id = 1;
        t1.reference_answer = "alpha beta gamma";
        t1.ai_answer = "alpha beta delta";
        t1.human_answer = "one two three";
        t1.max_length_tokens = 100;
        TripletRecord t2;
        t2.question_id = 2;
        t2.reference_answer = "question answer code";
        t2.ai_answer = "question answer value";
        t2.human_answer = "hello world text";
        t2.max_length_tokens = 100;
        return {t1, t2};
    }
};

// All whitespace runs of a text, in order.
std::vector<std::string> whitespace_runs(const std::string& text) {
    std::vector<std::string> runs;
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isspace(static_cast<unsigned char>(text[i]))) {
            std::size_t start = i;
            while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            runs.push_back(text.substr(start, i - start));
        } else {
            ++i;
        }
    }
    return runs;
}

}  // namespace

TEST_SUITE("evalkit") {

TEST_CASE("metrics worked example") {
    ConfusionMatrix cm{2, 1, 1, 2};
    MetricsReport r = metrics(cm);
    REQUIRE(r.accuracy.has_value());
    REQUIRE(r.precision.has_value());
    REQUIRE(r.recall.has_value());
    REQUIRE(r.f1.has_value());
    CHECK(*r.accuracy == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
    CHECK(*r.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(*r.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(*r.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(r.confusion == cm);
    CHECK(r.buckets.empty());
}

TEST_CASE("zero denominators stay undefined instead of becoming zero") {
    SUBCASE("no predicted positives: precision undefined") {
        MetricsReport r = metrics({0, 0, 0, 5});
        CHECK(*r.accuracy == 1.0);
        CHECK_FALSE(r.precision.has_value());
        CHECK_FALSE(r.recall.has_value());
        CHECK_FALSE(r.f1.has_value());
    }
    SUBCASE("no true positives anywhere: f1 undefined when p + r == 0") {
        MetricsReport r = metrics({0, 2, 2, 0});
        REQUIRE(r.precision.has_value());
        REQUIRE(r.recall.has_value());
        CHECK(*r.precision == 0.0);
        CHECK(*r.recall == 0.0);
        CHECK_FALSE(r.f1.has_value());
    }
    SUBCASE("an empty matrix is an error") {
        CHECK_THROWS_AS(metrics(ConfusionMatrix{}), EmptyMatrix);
    }
}

TEST_CASE("metrics match a brute-force recomputation on 1000 random matrices") {
    RandomEngine rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        ConfusionMatrix cm{rng.bounded(50), rng.bounded(50), rng.bounded(50), rng.bounded(50)};
        if (cm.total() == 0) continue;
        MetricsReport r = metrics(cm);

        double total = static_cast<double>(cm.tp + cm.fp + cm.fn + cm.tn);
        double acc = static_cast<double>(cm.tp + cm.tn) / total;
        REQUIRE(r.accuracy.has_value());
        CHECK(*r.accuracy == acc);

        if (cm.tp + cm.fp > 0) {
            double p = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
            REQUIRE(r.precision.has_value());
            CHECK(*r.precision == p);
        } else {
            CHECK_FALSE(r.precision.has_value());
        }
        if (cm.tp + cm.fn > 0) {
            double rec = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
            REQUIRE(r.recall.has_value());
            CHECK(*r.recall == rec);
        } else {
            CHECK_FALSE(r.recall.has_value());
        }
        if (r.precision && r.recall && *r.precision + *r.recall > 0.0) {
            double f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
            REQUIRE(r.f1.has_value());
            CHECK(*r.f1 == f1);
        } else {
            CHECK_FALSE(r.f1.has_value());
        }
    }
}

TEST_CASE("outcome counting matches a manual tally") {
    RandomEngine rng(7);
    std::vector<PairOutcome> outcomes;
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (int i = 0; i < 1000; ++i) {
        PairOutcome o;
        o.true_ai = rng.bounded(2) == 1;
        o.predicted_ai = rng.bounded(2) == 1;
        o.candidate_tokens = rng.bounded(400);
        outcomes.push_back(o);
        if (o.true_ai && o.predicted_ai) ++tp;
        if (!o.true_ai && o.predicted_ai) ++fp;
        if (o.true_ai && !o.predicted_ai) ++fn;
        if (!o.true_ai && !o.predicted_ai) ++tn;
    }
    ConfusionMatrix cm = confusion_from_outcomes(outcomes);
    CHECK(cm.tp == tp);
    CHECK(cm.fp == fp);
    CHECK(cm.fn == fn);
    CHECK(cm.tn == tn);
}

TEST_CASE("length buckets are half-open and labeled") {
    std::vector<PairOutcome> outcomes;
    auto add = [&](std::size_t tokens, bool truth, bool pred) {
        outcomes.push_back({truth, pred, tokens, 0.0});
    };
    add(0, true, true);
    add(49, true, true);   // both land in [0,50)
    add(50, true, false);  // boundary value goes right: [50,100)
    add(99, false, false);
    add(100, false, true);  // [100,inf)
    add(500, true, true);

    auto buckets = bucket_by_length(outcomes, {50, 100});
    REQUIRE(buckets.size() == 3);
    CHECK(buckets[0].first == "[0,50)");
    CHECK(buckets[1].first == "[50,100)");
    CHECK(buckets[2].first == "[100,inf)");
    CHECK(buckets[0].second.confusion == ConfusionMatrix{2, 0, 0, 0});
    CHECK(buckets[1].second.confusion == ConfusionMatrix{0, 0, 1, 1});
    CHECK(buckets[2].second.confusion == ConfusionMatrix{1, 1, 0, 0});

    // Bucket populations always sum to the outcome count.
    std::uint64_t total = 0;
    for (const auto& [label, report] : buckets) total += report.confusion.total();
    CHECK(total == outcomes.size());
}

TEST_CASE("an empty bucket keeps every metric undefined") {
    std::vector<PairOutcome> outcomes{{true, true, 10, 0.0}};
    auto buckets = bucket_by_length(outcomes, {50});
    REQUIRE(buckets.size() == 2);
    CHECK(buckets[1].second.confusion.total() == 0);
    CHECK_FALSE(buckets[1].second.accuracy.has_value());
    CHECK_FALSE(buckets[1].second.precision.has_value());
    CHECK_FALSE(buckets[1].second.recall.has_value());
    CHECK_FALSE(buckets[1].second.f1.has_value());
}

TEST_CASE("bucket boundaries must be strictly increasing") {
    std::vector<PairOutcome> outcomes{{true, true, 10, 0.0}};
    CHECK_THROWS_AS(bucket_by_length(outcomes, {50, 50}), BadBoundaries);
    CHECK_THROWS_AS(bucket_by_length(outcomes, {100, 50}), BadBoundaries);
    // No boundaries: a single all-covering bucket.
    auto buckets = bucket_by_length(outcomes, {});
    REQUIRE(buckets.size() == 1);
    CHECK(buckets[0].first == "[0,inf)");
    CHECK(buckets[0].second.confusion.total() == 1);
}

TEST_CASE("evaluation turns each triplet into one machine and one human pair") {
    EvalFixture fx;
    Detector det = fx.make();
    std::vector<TripletRecord> test = fx.small_test();

    SUBCASE("threshold -1 predicts everything machine-written") {
        MetricsReport r = evaluate(det, test, -1.0);
        CHECK(r.confusion == ConfusionMatrix{2, 2, 0, 0});
        CHECK(*r.accuracy == 0.5);
        CHECK(*r.recall == 1.0);
        CHECK(*r.precision == 0.5);
        REQUIRE(r.buckets.size() == kDefaultBucketBoundaries.size() + 1);
        CHECK(r.buckets[0].first == "[0,50)");
        // All four candidates are three words long: everything in [0,50).
        CHECK(r.buckets[0].second.confusion.total() == 4);
    }
    SUBCASE("a threshold above any cosine predicts everything human-written") {
        MetricsReport r = evaluate(det, test, 1.001);
        CHECK(r.confusion == ConfusionMatrix{0, 0, 2, 2});
        CHECK(*r.accuracy == 0.5);
        CHECK(*r.recall == 0.0);
        CHECK_FALSE(r.precision.has_value());
    }
    SUBCASE("an empty test set is an error") {
        CHECK_THROWS_AS(evaluate(det, {}, 0.5), EmptyMatrix);
    }
}

TEST_CASE("attack kinds have stable names") {
    CHECK(to_string(AttackKind::CharPerturb) == "char-perturb");
    CHECK(to_string(AttackKind::SynonymSub) == "synonym-sub");
    CHECK(attack_kind_from_string("char-perturb") == AttackKind::CharPerturb);
    CHECK(attack_kind_from_string("synonym-sub") == AttackKind::SynonymSub);
    CHECK_THROWS_AS(attack_kind_from_string("typo-storm"), std::invalid_argument);
}

TEST_CASE("attack spec validation") {
    AttackSpec char_spec;
    char_spec.kind = AttackKind::CharPerturb;
    CHECK_NOTHROW(char_spec.validate());

    AttackSpec syn_spec;
    syn_spec.kind = AttackKind::SynonymSub;
    CHECK_THROWS_AS(syn_spec.validate(), LexiconMissing);
    syn_spec.lexicon_path = "somewhere.tsv";
    CHECK_NOTHROW(syn_spec.validate());
}

TEST_CASE("character perturbation preserves structure within its budget") {
    const std::string text = "the quick brown fox jumps over the lazy dog";
    AttackSpec spec;
    spec.kind = AttackKind::CharPerturb;
    spec.budget = 3;
    spec.seed = 11;

    std::string attacked = attack_char_perturb(text, spec);
    CHECK(attacked != text);

    // Word count and every whitespace run survive.
    CHECK(split_whitespace(attacked).size() == split_whitespace(text).size());
    CHECK(whitespace_runs(attacked) == whitespace_runs(text));

    // Each edited word moves by at most 2 character operations (a swap), and
    // at most `budget` words are touched.
    CHECK(testsupport::levenshtein(text, attacked) <= 2 * spec.budget);
    std::vector<std::string> before = split_whitespace(text);
    std::vector<std::string> after = split_whitespace(attacked);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < before.size(); ++i) {
        if (before[i] != after[i]) {
            ++changed;
            CHECK(before[i].size() >= 3);  // short words are never touched
            CHECK(testsupport::levenshtein(before[i], after[i]) <= 2);
        }
    }
    CHECK(changed >= 1);
    CHECK(changed <= spec.budget);
}

TEST_CASE("character perturbation identity cases") {
    AttackSpec spec;
    spec.kind = AttackKind::CharPerturb;
    spec.budget = 0;
    CHECK(attack_char_perturb("anything at all", spec) == "anything at all");

    spec.budget = 5;
    CHECK(attack_char_perturb("", spec).empty());
    CHECK(attack_char_perturb("a bb c d", spec) == "a bb c d");  // nothing eligible
}

TEST_CASE("character perturbation is deterministic per seed") {
    const std::string text = "several reasonably long words appear here today";
    AttackSpec spec;
    spec.kind = AttackKind::CharPerturb;
    spec.budget = 2;
    spec.seed = 3;
    CHECK(attack_char_perturb(text, spec) == attack_char_perturb(text, spec));

    AttackSpec other = spec;
    other.seed = 4;
    CHECK(attack_char_perturb(text, spec) != attack_char_perturb(text, other));
}

TEST_CASE("character perturbation honors unusual whitespace") {
    const std::string text = "  leading  and\ttabbed words\n\nhere  ";
    AttackSpec spec;
    spec.kind = AttackKind::CharPerturb;
    spec.budget = 10;
    spec.seed = 1;
    std::string attacked = attack_char_perturb(text, spec);
    CHECK(whitespace_runs(attacked) == whitespace_runs(text));
    CHECK(split_whitespace(attacked).size() == split_whitespace(text).size());
}

TEST_CASE("lexicon files parse words and comma-separated synonyms") {
    TempDir dir;
    std::string path = dir.file("syn.tsv");
    write_text(path,
               "error\tmistake,fault,blunder\n"
               "ANSWER\tReply, Response\n"
               "malformed line without a tab\n"
               "\n"
               "empty\t , ,\n"
               "value\tquantity\r\n");
    SynonymLexicon lex = load_lexicon(path);
    REQUIRE(lex.count("error") == 1);
    CHECK(lex["error"] == std::vector<std::string>{"mistake", "fault", "blunder"});
    REQUIRE(lex.count("answer") == 1);  // keys and synonyms fold to lower case
    CHECK(lex["answer"] == std::vector<std::string>{"reply", "response"});
    CHECK(lex.count("empty") == 0);  // no usable synonyms
    REQUIRE(lex.count("value") == 1);
    CHECK(lex["value"] == std::vector<std::string>{"quantity"});
    CHECK(lex.size() == 3);

    CHECK_THROWS_AS(load_lexicon(dir.file("absent.tsv")), LexiconMissing);
}

TEST_CASE("synonym substitution replaces a word when it lowers similarity") {
    EvalFixture fx;
    Detector det = fx.make();
    TempDir dir;
    std::string lexicon = dir.file("syn.tsv");
    write_text(lexicon, "beta\tone\n");

    AttackSpec spec;
    spec.kind = AttackKind::SynonymSub;
    spec.budget = 3;
    spec.seed = 0;
    spec.lexicon_path = lexicon;

    // The candidate equals the reference, so its similarity is the maximum
    // possible; swapping "beta" for "one" must drop it, and the greedy rule
    // accepts the drop.
    const std::string reference = "alpha beta gamma delta";
    const std::string text = "alpha beta gamma delta";
    std::string attacked = attack_synonym_sub(text, spec, det, reference);
    CHECK(attacked == "alpha one gamma delta");

    // The invariant: attacked similarity never exceeds the original.
    Tensor<float> ref_vec = det.embed(reference);
    double before = det.similarity_to(ref_vec, det.tokenize(clean_text(text)));
    double after = det.similarity_to(ref_vec, det.tokenize(clean_text(attacked)));
    CHECK(after <= before);
}

TEST_CASE("synonym substitution never raises similarity across many texts") {
    EvalFixture fx;
    Detector det = fx.make();
    TempDir dir;
    std::string lexicon = dir.file("syn.tsv");
    write_text(lexicon,
               "alpha\tone,hello\n"
               "beta\ttwo,world\n"
               "gamma\tthree\n"
               "delta\tfour\n");

    AttackSpec spec;
    spec.kind = AttackKind::SynonymSub;
    spec.budget = 2;
    spec.lexicon_path = lexicon;

    const std::string reference = "alpha beta gamma delta question answer";
    Tensor<float> ref_vec = det.embed(reference);
    RandomEngine rng(55);
    std::vector<std::string> pool{"alpha", "beta",  "gamma",    "delta", "one",
                                  "two",   "three", "question", "code",  "thing"};
    for (int trial = 0; trial < 20; ++trial) {
        std::string text;
        std::size_t len = 4 + rng.bounded(8);
        for (std::size_t w = 0; w < len; ++w) {
            if (w > 0) text += ' ';
            text += pool[rng.bounded(pool.size())];
        }
        spec.seed = static_cast<std::uint64_t>(trial);
        std::string attacked = attack_synonym_sub(text, spec, det, reference);

        double before = det.similarity_to(ref_vec, det.tokenize(clean_text(text)));
        double after = det.similarity_to(ref_vec, det.tokenize(clean_text(attacked)));
        CAPTURE(text);
        CAPTURE(attacked);
        CHECK(after <= before);
        // Word count is preserved even when substitutions land.
        CHECK(split_whitespace(attacked).size() == split_whitespace(text).size());
    }
}

TEST_CASE("synonym substitution identity cases") {
    EvalFixture fx;
    Detector det = fx.make();
    TempDir dir;

    AttackSpec spec;
    spec.kind = AttackKind::SynonymSub;
    spec.lexicon_path = dir.file("syn.tsv");
    write_text(spec.lexicon_path, "beta\tone\n");

    SUBCASE("budget zero returns the text untouched") {
        spec.budget = 0;
        CHECK(attack_synonym_sub("alpha beta", spec, det, "alpha beta") == "alpha beta");
    }
    SUBCASE("no lexicon-covered words returns the text untouched") {
        spec.budget = 3;
        CHECK(attack_synonym_sub("hello world", spec, det, "alpha beta") == "hello world");
    }
    SUBCASE("an effectively empty lexicon returns the text untouched") {
        std::string empty_lex = dir.file("empty.tsv");
        write_text(empty_lex, "no tabs on this line\n");
        spec.budget = 3;
        spec.lexicon_path = empty_lex;
        CHECK(attack_synonym_sub("alpha beta", spec, det, "alpha beta") == "alpha beta");
    }
}

TEST_CASE("robustness evaluation with budget zero changes nothing") {
    EvalFixture fx;
    Detector det = fx.make();
    std::vector<TripletRecord> test = fx.small_test();

    AttackSpec spec;
    spec.kind = AttackKind::CharPerturb;
    spec.budget = 0;
    spec.seed = 9;
    auto [clean, attacked] = robustness_eval(det, test, 0.5, spec);
    CHECK(clean == attacked);
}

TEST_CASE("robustness evaluation attacks only the machine answers") {
    EvalFixture fx;
    Detector det = fx.make();
    std::vector<TripletRecord> test = fx.small_test();

    AttackSpec spec;
    spec.kind = AttackKind::CharPerturb;
    spec.budget = 3;
    spec.seed = 2;
    auto [clean, attacked] = robustness_eval(det, test, -1.0, spec);

    // Both reports cover 2 pairs per triplet.
    CHECK(clean.confusion.total() == 2 * test.size());
    CHECK(attacked.confusion.total() == 2 * test.size());
    // Human-pair outcomes are untouched by the attack: with threshold -1
    // everything is predicted machine, so fp counts the human pairs in both.
    CHECK(clean.confusion.fp == test.size());
    CHECK(attacked.confusion.fp == test.size());
    CHECK(clean.confusion.tp + clean.confusion.fn == test.size());
    CHECK(attacked.confusion.tp + attacked.confusion.fn == test.size());
}

TEST_CASE("flat rendering emits one labeled line per metric") {
    MetricsReport r = metrics({2, 1, 1, 2});
    std::string flat = render_flat(r);
    CHECK(flat.find("accuracy\t0.66666666666666") != std::string::npos);
    CHECK(flat.find("precision\t0.66666666666666") != std::string::npos);
    CHECK(flat.find("recall\t0.66666666666666") != std::string::npos);
    CHECK(flat.find("f1\t0.66666666666666") != std::string::npos);
    CHECK(flat.find("tp\t2\n") != std::string::npos);
    CHECK(flat.find("fp\t1\n") != std::string::npos);
    CHECK(flat.find("fn\t1\n") != std::string::npos);
    CHECK(flat.find("tn\t2\n") != std::string::npos);

    // Undefined metrics render as the word, not as zero.
    MetricsReport und = metrics({0, 0, 0, 5});
    std::string und_flat = render_flat(und);
    CHECK(und_flat.find("precision\tundefined") != std::string::npos);
    CHECK(und_flat.find("f1\tundefined") != std::string::npos);

    // Buckets nest under a labeled prefix.
    std::vector<PairOutcome> outcomes{{true, true, 10, 0.9}, {false, false, 80, 0.1}};
    MetricsReport bucketed = metrics(confusion_from_outcomes(outcomes));
    bucketed.buckets = bucket_by_length(outcomes, {50});
    std::string bflat = render_flat(bucketed);
    CHECK(bflat.find("bucket[0,50).accuracy\t1\n") != std::string::npos);
    CHECK(bflat.find("bucket[50,inf).accuracy\t1\n") != std::string::npos);

    // A prefix argument scopes every line.
    std::string prefixed = render_flat(r, "clean.");
    CHECK(prefixed.find("clean.accuracy\t") != std::string::npos);
    CHECK(prefixed.find("clean.tp\t2\n") != std::string::npos);
}

TEST_CASE("json rendering is a parseable single-line document") {
    MetricsReport r = metrics({2, 1, 1, 2});
    std::vector<PairOutcome> outcomes{{true, true, 10, 0.9}, {false, false, 80, 0.1}};
    r.buckets = bucket_by_length(outcomes, {50});

    std::string doc = render_json(r);
    CHECK(doc.find('\n') == std::string::npos);
    nlohmann::json j = nlohmann::json::parse(doc);
    CHECK(j["accuracy"].get<double>() == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
    CHECK(j["confusion"]["tp"].get<int>() == 2);
    CHECK(j["confusion"]["tn"].get<int>() == 2);
    REQUIRE(j.contains("buckets"));
    REQUIRE(j["buckets"].size() == 2);
    CHECK(j["buckets"][0]["bucket"].get<std::string>() == "[0,50)");

    MetricsReport und = metrics({0, 0, 0, 5});
    nlohmann::json ju = nlohmann::json::parse(render_json(und));
    CHECK(ju["precision"].get<std::string>() == "undefined");
}

TEST_CASE("robustness rendering pairs the clean and attacked reports") {
    MetricsReport clean = metrics({2, 1, 1, 2});
    MetricsReport attacked = metrics({1, 1, 2, 2});
    std::string flat = render_robustness_flat(clean, attacked);
    CHECK(flat.find("clean.accuracy\t") != std::string::npos);
    CHECK(flat.find("attacked.accuracy\t") != std::string::npos);
    CHECK(flat.find("clean.tp\t2\n") != std::string::npos);
    CHECK(flat.find("attacked.tp\t1\n") != std::string::npos);

    nlohmann::json j = nlohmann::json::parse(render_robustness_json(clean, attacked));
    CHECK(j["clean"]["confusion"]["tp"].get<int>() == 2);
    CHECK(j["attacked"]["confusion"]["tp"].get<int>() == 1);
}

}  // TEST_SUITE
