#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lattag/training.hpp"

namespace lattag {

namespace {

constexpr char kMagic[5] = {'L', 'T', 'S', 'E', 'Q'};
constexpr unsigned char kVersion = 0x01;

// Header items are escaped to printable ASCII: '\' doubles, anything outside
// [0x21, 0x7E] becomes \xHH. Tokens may then safely sit next to separators.
std::string escape_item(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    char buf[8];
    for (unsigned char c : s) {
        if (c == '\\') {
            out += "\\\\";
        } else if (c < 0x21 || c > 0x7E) {
            std::snprintf(buf, sizeof buf, "\\x%02X", c);
            out += buf;
        } else {
            out += static_cast<char>(c);
        }
    }
    return out;
}

std::string unescape_item(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out += s[i];
            continue;
        }
        if (i + 1 < s.size() && s[i + 1] == '\\') {
            out += '\\';
            ++i;
        } else if (i + 3 < s.size() && s[i + 1] == 'x') {
            out += static_cast<char>(std::stoi(s.substr(i + 2, 2), nullptr, 16));
            i += 3;
        } else {
            throw FormatError("bad escape in header item: " + s);
        }
    }
    return out;
}

void write_u16(std::ostream& out, std::uint16_t v) {
    const unsigned char bytes[2] = {static_cast<unsigned char>(v & 0xFF),
                                    static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(bytes), 2);
}

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

void write_f32(std::ostream& out, float v) { write_u32(out, std::bit_cast<std::uint32_t>(v)); }

bool read_exact(std::istream& in, void* dst, std::size_t n) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount()) == n;
}

std::uint16_t read_u16(std::istream& in) {
    unsigned char bytes[2];
    if (!read_exact(in, bytes, 2)) throw FormatError("model file truncated");
    return static_cast<std::uint16_t>(bytes[0] | (bytes[1] << 8));
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char bytes[4];
    if (!read_exact(in, bytes, 4)) throw FormatError("model file truncated");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[i];
    return v;
}

std::string build_header(const Checkpoint& checkpoint) {
    const ModelParameters<float>& m = checkpoint.model;
    std::ostringstream h;
    char buf[64];
    h << "heads ";
    if (m.hp.lemma_head && m.hp.pos_head) {
        h << "lemma,pos";
    } else {
        h << (m.hp.lemma_head ? "lemma" : "pos");
    }
    h << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", m.hp.lemma_weight);
    h << "lemma_weight " << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", m.hp.pos_weight);
    h << "pos_weight " << buf << '\n';
    h << "recurrent_dim " << m.hp.recurrent_dim << '\n';
    h << "dense_dim " << m.hp.dense_dim << '\n';
    h << "encoder_out_dim " << m.hp.encoder_out_dim << '\n';
    h << "embedding_dim " << m.hp.embedding_dim << '\n';
    h << "context_projection_dim " << m.hp.context_projection_dim << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", m.hp.dropout_p);
    h << "dropout_p " << buf << '\n';
    h << "checkpoint_epoch " << checkpoint.epoch << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", checkpoint.selection_metric);
    h << "selection_metric " << buf << '\n';
    h << "max_token_len " << m.vocab.max_token_len << '\n';
    h << "max_lemma_len " << m.vocab.max_lemma_len << '\n';
    h << "char_alphabet " << m.vocab.char_alphabet.size() << '\n';
    for (char c : m.vocab.char_alphabet) h << escape_item(std::string(1, c)) << '\n';
    h << "lemma_alphabet " << m.vocab.lemma_alphabet.size() << '\n';
    for (char c : m.vocab.lemma_alphabet) h << escape_item(std::string(1, c)) << '\n';
    h << "tagset " << m.vocab.tagset.size() << '\n';
    for (const auto& tag : m.vocab.tagset) h << escape_item(tag) << '\n';
    h << "token_lexicon " << m.vocab.tokens.size() << '\n';
    for (std::size_t i = 0; i < m.vocab.tokens.size(); ++i) {
        h << escape_item(m.vocab.tokens[i]) << '\t' << m.vocab.token_counts[i] << '\n';
    }
    return h.str();
}

class HeaderParser {
public:
    explicit HeaderParser(const std::string& text) : in_(text) {}

    std::string next_line() {
        std::string line;
        if (!std::getline(in_, line)) throw FormatError("model header truncated");
        return line;
    }

    // "key value" lines; enforces the expected key.
    std::string value_of(const std::string& key) {
        const std::string line = next_line();
        if (line.size() < key.size() + 1 || line.compare(0, key.size(), key) != 0 ||
            line[key.size()] != ' ') {
            throw FormatError("model header: expected '" + key + "', got '" + line + "'");
        }
        return line.substr(key.size() + 1);
    }

    std::size_t size_of(const std::string& key) {
        return static_cast<std::size_t>(std::stoull(value_of(key)));
    }
    double double_of(const std::string& key) { return std::stod(value_of(key)); }

private:
    std::istringstream in_;
};

} // namespace

void save_model(const Checkpoint& checkpoint, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model: " + path);

    out.write(kMagic, sizeof kMagic);
    out.put(static_cast<char>(kVersion));
    const std::string header = build_header(checkpoint);
    write_u32(out, static_cast<std::uint32_t>(header.size()));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));

    // The const_cast only feeds the read-only traversal below.
    auto& model = const_cast<ModelParameters<float>&>(checkpoint.model);
    model.for_each_parameter([&out](Parameter<float>& p) {
        write_u16(out, static_cast<std::uint16_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        out.put(static_cast<char>(p.value.rank()));
        for (std::size_t d = 0; d < p.value.rank(); ++d) {
            write_u32(out, static_cast<std::uint32_t>(p.value.dim(d)));
        }
        for (std::size_t i = 0; i < p.value.size(); ++i) write_f32(out, p.value[i]);
    });
    if (!out) throw IoError("failed writing model: " + path);
}

ModelParameters<float> load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model: " + path);

    char magic[5];
    if (!read_exact(in, magic, 5) || std::memcmp(magic, kMagic, 5) != 0) {
        throw FormatError("not a model file (bad magic)");
    }
    const int version = in.get();
    if (version != kVersion) {
        throw FormatError("unsupported model version " + std::to_string(version));
    }
    const std::uint32_t header_len = read_u32(in);
    std::string header(header_len, '\0');
    if (!read_exact(in, header.data(), header_len)) {
        throw FormatError("model file truncated in header");
    }

    HeaderParser hp(header);
    Hyperparameters params;
    const std::string heads = hp.value_of("heads");
    params.lemma_head = heads == "lemma" || heads == "lemma,pos";
    params.pos_head = heads == "pos" || heads == "lemma,pos";
    if (!params.lemma_head && !params.pos_head) {
        throw FormatError("model header: bad heads '" + heads + "'");
    }
    params.lemma_weight = hp.double_of("lemma_weight");
    params.pos_weight = hp.double_of("pos_weight");
    params.recurrent_dim = hp.size_of("recurrent_dim");
    params.dense_dim = hp.size_of("dense_dim");
    params.encoder_out_dim = hp.size_of("encoder_out_dim");
    params.embedding_dim = hp.size_of("embedding_dim");
    params.context_projection_dim = hp.size_of("context_projection_dim");
    params.dropout_p = hp.double_of("dropout_p");
    hp.value_of("checkpoint_epoch");
    hp.value_of("selection_metric");

    Vocabularies vocab;
    vocab.max_token_len = static_cast<int>(hp.size_of("max_token_len"));
    vocab.max_lemma_len = static_cast<int>(hp.size_of("max_lemma_len"));
    const std::size_t n_chars = hp.size_of("char_alphabet");
    for (std::size_t i = 0; i < n_chars; ++i) {
        const std::string item = unescape_item(hp.next_line());
        if (item.size() != 1) throw FormatError("model header: bad alphabet entry");
        vocab.char_alphabet.push_back(item[0]);
    }
    const std::size_t n_lemma_chars = hp.size_of("lemma_alphabet");
    for (std::size_t i = 0; i < n_lemma_chars; ++i) {
        const std::string item = unescape_item(hp.next_line());
        if (item.size() != 1) throw FormatError("model header: bad lemma alphabet entry");
        vocab.lemma_alphabet.push_back(item[0]);
    }
    const std::size_t n_tags = hp.size_of("tagset");
    for (std::size_t i = 0; i < n_tags; ++i) {
        vocab.tagset.push_back(unescape_item(hp.next_line()));
    }
    const std::size_t n_tokens = hp.size_of("token_lexicon");
    for (std::size_t i = 0; i < n_tokens; ++i) {
        const std::string line = hp.next_line();
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) throw FormatError("model header: bad lexicon entry");
        vocab.tokens.push_back(unescape_item(line.substr(0, tab)));
        vocab.token_counts.push_back(
            static_cast<std::uint32_t>(std::stoul(line.substr(tab + 1))));
    }
    vocab.rebuild_indices();

    // Allocate every parameter, then fill tensors from the file by name.
    ModelParameters<float> model = init_model<float>(vocab, params, nullptr, /*seed=*/0);
    std::map<std::string, Parameter<float>*> by_name;
    model.for_each_parameter([&by_name](Parameter<float>& p) { by_name[p.name] = &p; });

    std::set<std::string> seen;
    while (true) {
        in.peek();
        if (in.eof()) break;
        const std::uint16_t name_len = read_u16(in);
        std::string name(name_len, '\0');
        if (!read_exact(in, name.data(), name_len)) throw FormatError("model file truncated");
        const int rank = in.get();
        if (rank < 0) throw FormatError("model file truncated");
        std::vector<std::size_t> dims;
        for (int d = 0; d < rank; ++d) dims.push_back(read_u32(in));

        auto it = by_name.find(name);
        if (it == by_name.end()) throw FormatError("unknown tensor '" + name + "' in model file");
        if (!seen.insert(name).second) {
            throw FormatError("duplicate tensor '" + name + "' in model file");
        }
        Parameter<float>& p = *it->second;
        if (p.value.shape() != dims) {
            throw FormatError("tensor '" + name + "' has unexpected shape");
        }
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            p.value[i] = std::bit_cast<float>(read_u32(in));
        }
    }
    if (seen.size() != by_name.size()) {
        throw FormatError("model file holds " + std::to_string(seen.size()) +
                          " tensors, expected " + std::to_string(by_name.size()));
    }
    return model;
}

} // namespace lattag
