#include "lattag/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>

#include "lattag/corpus.hpp"
#include "lattag/embeddings.hpp"
#include "lattag/evaluation.hpp"
#include "lattag/model.hpp"
#include "lattag/rules.hpp"
#include "lattag/training.hpp"
#include "lattag/tsne.hpp"

namespace lattag {

namespace {

struct GlobalOptions {
    std::uint64_t seed = 0;
    bool quiet = false;
};

void classicize_lemmas(Corpus& corpus, const RuleTable& table,
                       const ExceptionLexicon* exceptions) {
    for (auto& sentence : corpus.sentences) {
        for (auto& tok : sentence) {
            tok.lemma = classicize(lowercase_ascii(tok.lemma), table, exceptions);
        }
    }
}

void print_stats(const CorpusStats& stats) {
    std::printf("tokens\t%zu\n", stats.tokens);
    std::printf("unique_tokens\t%zu\n", stats.unique_tokens);
    std::printf("unique_lemmas\t%zu\n", stats.unique_lemmas);
    if (stats.proportion_unseen) {
        std::printf("prop_unseen\t%.2f\n", *stats.proportion_unseen);
    }
}

int cmd_stats(const std::string& input, const std::string& train_path) {
    const Corpus corpus = load_corpus(input, Split::unlabeled);
    if (train_path.empty()) {
        print_stats(corpus_stats(corpus));
    } else {
        const Corpus train = load_corpus(train_path, Split::train);
        const Vocabularies vocab = build_vocabularies(train);
        print_stats(corpus_stats(corpus, &vocab));
    }
    return 0;
}

struct PretrainArgs {
    std::string train_path, out_path;
    SkipgramConfig config;
};

int cmd_pretrain(const PretrainArgs& args, const GlobalOptions& global) {
    const Corpus train = load_corpus(args.train_path, Split::train);
    const Vocabularies vocab = build_vocabularies(train);
    const SkipgramResult result = pretrain_skipgram(train, vocab, args.config, global.seed);
    save_embeddings(result.matrix, vocab, args.out_path);
    if (!global.quiet) {
        std::fprintf(stderr, "pretrained %zu x %zu embeddings (%zu sweeps)\n",
                     static_cast<std::size_t>(vocab.lexicon_size()), args.config.dim,
                     args.config.sweeps);
    }
    return 0;
}

struct TrainArgs {
    std::string train_path, dev_path, out_path, embeddings_path, exceptions_path;
    std::string heads = "lemma,pos";
    double dev_fraction = 0.10;
    bool classicize = false;
    Hyperparameters hp;
    TrainConfig cfg;
};

int cmd_train(const TrainArgs& args, const GlobalOptions& global) {
    Corpus full = load_corpus(args.train_path, Split::train);
    Corpus train, dev;
    if (!args.dev_path.empty()) {
        train = std::move(full);
        dev = load_corpus(args.dev_path, Split::dev);
    } else {
        std::tie(train, dev) = split_train_dev(full, args.dev_fraction);
    }

    if (args.classicize) {
        const RuleTable table = default_rule_table();
        ExceptionLexicon exceptions;
        if (!args.exceptions_path.empty()) {
            exceptions = load_exception_lexicon(args.exceptions_path);
        }
        const ExceptionLexicon* exc = args.exceptions_path.empty() ? nullptr : &exceptions;
        classicize_lemmas(train, table, exc);
        classicize_lemmas(dev, table, exc);
    }

    Hyperparameters hp = args.hp;
    hp.lemma_head = args.heads.find("lemma") != std::string::npos;
    hp.pos_head = args.heads.find("pos") != std::string::npos;
    if (!hp.lemma_head && !hp.pos_head) {
        throw FormatError("--heads must name lemma, pos or lemma,pos");
    }

    const Vocabularies vocab = build_vocabularies(train);
    TrainConfig cfg = args.cfg;
    cfg.seed = global.seed;

    ModelParameters<float> model = init_model<float>(vocab, hp, nullptr, cfg.seed);
    if (!args.embeddings_path.empty()) {
        load_embeddings_into(model.embedding.value, vocab, args.embeddings_path);
    }

    const auto logger = [&global](const EpochRecord& rec) {
        if (global.quiet) return;
        std::fprintf(stderr, "epoch %zu loss %.6f", rec.epoch, rec.train_loss);
        if (rec.dev_lemma_all) std::fprintf(stderr, " dev_lemma %.2f", *rec.dev_lemma_all);
        if (rec.dev_pos_all) std::fprintf(stderr, " dev_pos %.2f", *rec.dev_pos_all);
        std::fprintf(stderr, " lr %.8g batch %zu (%.1fs)\n", rec.lr, rec.batch_size,
                     rec.wall_seconds);
    };

    FitResult result = fit(model, train, dev, cfg, logger);
    save_model(result.best, args.out_path);
    write_history_tsv(result.history, args.out_path + ".history.tsv");
    if (!global.quiet) {
        std::fprintf(stderr, "best epoch %zu (dev metric %.2f) written to %s\n",
                     result.best.epoch, result.best.selection_metric, args.out_path.c_str());
    }
    return 0;
}

int cmd_tag(const std::string& model_path, const std::string& input, const std::string& out) {
    const ModelParameters<float> model = load_model(model_path);
    const Corpus corpus = load_corpus(input, Split::unlabeled, /*require_gold=*/false);
    std::ofstream os(out, std::ios::binary);
    if (!os) throw IoError("cannot write output: " + out);
    for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
        const auto preds = predict(model, corpus.sentences[i]);
        for (std::size_t t = 0; t < corpus.sentences[i].size(); ++t) {
            os << corpus.sentences[i][t].surface;
            if (preds[t].lemma) os << '\t' << *preds[t].lemma;
            if (preds[t].pos) os << '\t' << *preds[t].pos;
            os << '\n';
        }
        os << '\n';
    }
    if (!os) throw IoError("failed writing output: " + out);
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& gold_path,
             const std::string& train_path, const std::string& format) {
    const ModelParameters<float> model = load_model(model_path);
    const Corpus gold = load_corpus(gold_path, Split::test);
    EvaluationReport report;
    if (train_path.empty()) {
        report = evaluate(model, gold, model.vocab);
    } else {
        const Vocabularies vocab = build_vocabularies(load_corpus(train_path, Split::train));
        report = evaluate(model, gold, vocab);
    }
    std::cout << (format == "tsv" ? render_report_tsv(report) : render_report_text(report));
    return 0;
}

struct NormalizeArgs {
    std::string input, rules_path, exceptions_path, out_path, column = "lemma";
};

int cmd_normalize(const NormalizeArgs& args) {
    const RuleTable table =
        args.rules_path.empty() ? default_rule_table() : load_rule_table(args.rules_path);
    ExceptionLexicon exceptions;
    if (!args.exceptions_path.empty()) {
        exceptions = load_exception_lexicon(args.exceptions_path);
    }
    const ExceptionLexicon* exc = args.exceptions_path.empty() ? nullptr : &exceptions;

    std::ifstream in(args.input, std::ios::binary);
    if (!in) throw IoError("cannot open input: " + args.input);
    std::ofstream file_out;
    if (!args.out_path.empty()) {
        file_out.open(args.out_path, std::ios::binary);
        if (!file_out) throw IoError("cannot write output: " + args.out_path);
    }
    std::ostream& os = args.out_path.empty() ? std::cout : file_out;

    const std::size_t column_index = args.column == "token" ? 0 : 1;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') {
            os << line << '\n';
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            if (tab == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        if (column_index >= fields.size()) {
            throw MalformedRecord(line_no, "no " + args.column + " column on this line");
        }
        fields[column_index] = classicize(lowercase_ascii(fields[column_index]), table, exc);
        for (std::size_t f = 0; f < fields.size(); ++f) {
            if (f) os << '\t';
            os << fields[f];
        }
        os << '\n';
    }
    if (!os) throw IoError("failed writing normalized output");
    return 0;
}

struct ProjectArgs {
    std::string model_path, embeddings_path, out_path;
    std::size_t top = 1000;
    TsneConfig config;
};

int cmd_project(const ProjectArgs& args, const GlobalOptions& global) {
    std::vector<std::string> tokens;
    Tensor<double> data;

    if (!args.model_path.empty()) {
        const ModelParameters<float> model = load_model(args.model_path);
        // Most frequent training tokens first; ties keep lexicon order.
        std::vector<std::size_t> order(model.vocab.tokens.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&model](std::size_t a, std::size_t b) {
            return model.vocab.token_counts[a] > model.vocab.token_counts[b];
        });
        const std::size_t n = std::min(args.top, order.size());
        const std::size_t dim = model.hp.embedding_dim;
        data = Tensor<double>({n, dim});
        for (std::size_t i = 0; i < n; ++i) {
            tokens.push_back(model.vocab.tokens[order[i]]);
            const float* row = model.embedding.value.row(order[i]);
            for (std::size_t d = 0; d < dim; ++d) data(i, d) = row[d];
        }
    } else {
        auto [file_tokens, values] = load_embedding_file(args.embeddings_path);
        const std::size_t n = std::min(args.top, file_tokens.size());
        data = Tensor<double>({n, values.cols()});
        for (std::size_t i = 0; i < n; ++i) {
            tokens.push_back(file_tokens[i]);
            for (std::size_t d = 0; d < values.cols(); ++d) data(i, d) = values(i, d);
        }
    }

    TsneDiagnostics diag;
    const Tensor<double> coords = tsne_project(data, args.config, global.seed, &diag);
    emit_scatter(coords, tokens, nullptr, args.out_path);
    if (!global.quiet) {
        std::fprintf(stderr, "projected %zu tokens; KL %.4f -> %.4f\n", tokens.size(),
                     diag.kl_first, diag.kl_final);
    }
    return 0;
}

int cmd_rules(const std::string& out_path) {
    const RuleTable table = default_rule_table();
    if (out_path.empty()) {
        for (const RewriteRule& rule : table.rules) {
            const char* anchor = rule.anchor == RuleAnchor::anywhere  ? "anywhere"
                                 : rule.anchor == RuleAnchor::initial ? "initial"
                                                                      : "final";
            std::cout << rule.pattern << '\t' << rule.replacement << '\t' << anchor << '\n';
        }
    } else {
        save_rule_table(table, out_path);
    }
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"lattag - integrated lemmatizer and PoS tagger for (medieval) Latin"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key=value file; explicit flags take precedence");

    GlobalOptions global;
    if (const char* env = std::getenv("LATTAG_SEED")) {
        global.seed = std::strtoull(env, nullptr, 10);
    }
    app.add_option("--seed", global.seed, "random seed (falls back to LATTAG_SEED)")
        ->capture_default_str();
    app.add_flag("--quiet", global.quiet, "suppress progress output on stderr");

    // stats
    auto* stats = app.add_subcommand("stats", "corpus statistics");
    std::string stats_input, stats_train;
    stats->add_option("--input", stats_input, "annotated corpus TSV")->required();
    stats->add_option("--train", stats_train, "training corpus for the unseen proportion");

    // pretrain
    auto* pretrain = app.add_subcommand("pretrain", "skipgram embedding pretraining");
    PretrainArgs pre;
    pretrain->add_option("--train", pre.train_path, "training corpus TSV")->required();
    pretrain->add_option("--out", pre.out_path, "embedding text file to write")->required();
    pretrain->add_option("--dim", pre.config.dim)->check(CLI::PositiveNumber)->capture_default_str();
    pretrain->add_option("--window", pre.config.window)->check(CLI::PositiveNumber)->capture_default_str();
    pretrain->add_option("--neg", pre.config.negatives)->check(CLI::PositiveNumber)->capture_default_str();
    pretrain->add_option("--sweeps", pre.config.sweeps)->check(CLI::PositiveNumber)->capture_default_str();

    // train
    auto* train = app.add_subcommand("train", "train a tagging model");
    TrainArgs ta;
    train->add_option("--train", ta.train_path, "training corpus TSV")->required();
    train->add_option("--dev", ta.dev_path, "development corpus TSV");
    train->add_option("--dev-fraction", ta.dev_fraction,
                      "dev share carved from the end of --train when --dev is absent")
        ->check(CLI::Range(0.0, 1.0)) // the exact bounds are rejected downstream
        ->capture_default_str();
    train->add_option("--heads", ta.heads, "lemma, pos or lemma,pos")
        ->check(CLI::IsMember({"lemma", "pos", "lemma,pos", "pos,lemma"}))
        ->capture_default_str();
    train->add_option("--out", ta.out_path, "model file to write")->required();
    train->add_option("--embeddings", ta.embeddings_path, "pretrained embedding text file");
    train->add_flag("--classicize-lemmas", ta.classicize,
                    "normalize gold lemmas with the built-in rule table before training");
    train->add_option("--exceptions", ta.exceptions_path,
                      "exception lexicon used with --classicize-lemmas");
    train->add_option("--max-epochs", ta.cfg.max_epochs)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--batch-size", ta.cfg.batch_size_initial)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--lr", ta.cfg.lr_initial)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--patience", ta.cfg.patience)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--schedule-epoch", ta.cfg.schedule_epoch)->capture_default_str();
    train->add_option("--recurrent-dim", ta.hp.recurrent_dim)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--dense-dim", ta.hp.dense_dim)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--encoder-out-dim", ta.hp.encoder_out_dim)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--embedding-dim", ta.hp.embedding_dim)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--context-dim", ta.hp.context_projection_dim)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--dropout", ta.hp.dropout_p)
        ->check(CLI::Range(0.0, std::nextafter(1.0, 0.0)))
        ->capture_default_str();

    // tag
    auto* tag = app.add_subcommand("tag", "tag a corpus with a trained model");
    std::string tag_model, tag_input, tag_out;
    tag->add_option("--model", tag_model)->required();
    tag->add_option("--input", tag_input, "TSV with 1 or 3 columns")->required();
    tag->add_option("--out", tag_out)->required();

    // eval
    auto* eval = app.add_subcommand("eval", "score a model against gold annotation");
    std::string eval_model, eval_gold, eval_train, eval_format = "text";
    eval->add_option("--model", eval_model)->required();
    eval->add_option("--gold", eval_gold)->required();
    eval->add_option("--train", eval_train,
                     "training corpus for known/unknown flags (default: model snapshot)");
    eval->add_option("--format", eval_format)
        ->check(CLI::IsMember({"text", "tsv"}))
        ->capture_default_str();

    // normalize
    auto* normalize = app.add_subcommand("normalize", "classicize a corpus column");
    NormalizeArgs na;
    normalize->add_option("--input", na.input)->required();
    normalize->add_option("--rules", na.rules_path, "rule table (default: built-in)");
    normalize->add_option("--exceptions", na.exceptions_path);
    normalize->add_option("--column", na.column)
        ->check(CLI::IsMember({"lemma", "token"}))
        ->capture_default_str();
    normalize->add_option("--out", na.out_path, "output path (default: stdout)");

    // project
    auto* project = app.add_subcommand("project", "t-SNE projection of embeddings");
    ProjectArgs pa;
    auto* pa_model = project->add_option("--model", pa.model_path);
    project->add_option("--embeddings", pa.embeddings_path)->excludes(pa_model);
    project->add_option("--out", pa.out_path)->required();
    project->add_option("--top", pa.top)->check(CLI::PositiveNumber)->capture_default_str();
    project->add_option("--perplexity", pa.config.perplexity)->capture_default_str();
    project->add_option("--iterations", pa.config.iterations)->check(CLI::PositiveNumber)->capture_default_str();

    // rules
    auto* rules = app.add_subcommand("rules", "write the built-in rule table");
    std::string rules_out;
    rules->add_option("--out", rules_out, "output path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (stats->parsed()) return cmd_stats(stats_input, stats_train);
        if (pretrain->parsed()) return cmd_pretrain(pre, global);
        if (train->parsed()) return cmd_train(ta, global);
        if (tag->parsed()) return cmd_tag(tag_model, tag_input, tag_out);
        if (eval->parsed()) return cmd_eval(eval_model, eval_gold, eval_train, eval_format);
        if (normalize->parsed()) return cmd_normalize(na);
        if (project->parsed()) {
            if (pa.model_path.empty() && pa.embeddings_path.empty()) {
                std::fprintf(stderr, "project: need --model or --embeddings\n");
                return 2;
            }
            return cmd_project(pa, global);
        }
        if (rules->parsed()) return cmd_rules(rules_out);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
    return 0;
}

} // namespace lattag
