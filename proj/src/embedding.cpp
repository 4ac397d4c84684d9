#include "amtkit/embedding.hpp"

#include <cmath>
#include <random>

#include "binio.hpp"

namespace amtkit {

EmbeddingTable expand_embeddings(const EmbeddingTable& text, const EmbeddingTable& music) {
    if (text.dim != music.dim)
        raise(Errc::DimMismatch, "text dim " + std::to_string(text.dim) + " vs music dim " +
                                     std::to_string(music.dim));
    EmbeddingTable out;
    out.rows = text.rows + music.rows;
    out.dim = text.dim;
    out.data.reserve(size_t(out.rows) * out.dim);
    out.data.insert(out.data.end(), text.data.begin(), text.data.end());
    out.data.insert(out.data.end(), music.data.begin(), music.data.end());
    return out;
}

EmbeddingTable random_embedding(uint32_t rows, uint32_t dim, uint64_t seed, float stddev) {
    EmbeddingTable t;
    t.rows = rows;
    t.dim = dim;
    t.data.resize(size_t(rows) * dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, stddev);
    for (float& v : t.data) v = dist(rng);
    return t;
}

void write_emb1(const std::string& path, const EmbeddingTable& table) {
    std::vector<uint8_t> bytes;
    bytes.reserve(16 + table.data.size() * 4);
    bytes.insert(bytes.end(), {'E', 'M', 'B', '1'});
    binio::put_u32(bytes, table.rows);
    binio::put_u32(bytes, table.dim);
    binio::put_u32(bytes, 0);  // reserved, pads the header to 16 bytes
    for (float v : table.data) binio::put_f32(bytes, v);
    binio::write_file(path, bytes);
}

EmbeddingTable read_emb1(const std::string& path) {
    const auto bytes = binio::read_file(path);
    binio::Reader r(bytes.data(), bytes.size());
    r.magic("EMB1", "EMB1");
    EmbeddingTable t;
    t.rows = r.u32();
    t.dim = r.u32();
    r.u32();  // reserved
    const uint64_t n = uint64_t(t.rows) * t.dim;
    if (r.remaining() != n * 4)
        raise(Errc::IoError, path + ": payload size does not match header");
    t.data.resize(n);
    for (uint64_t i = 0; i < n; ++i) {
        t.data[i] = r.f32();
        if (!std::isfinite(t.data[i]))
            raise(Errc::IoError, path + ": non-finite embedding entry");
    }
    return t;
}

}  // namespace amtkit
