#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amtkit/error.hpp"

namespace amtkit {

/// Dense row-major (rows x dim) float matrix, as used for token embeddings.
struct EmbeddingTable {
    uint32_t rows = 0;
    uint32_t dim = 0;
    std::vector<float> data;  // rows * dim entries

    float* row(uint32_t r) { return data.data() + size_t(r) * dim; }
    const float* row(uint32_t r) const { return data.data() + size_t(r) * dim; }

    bool operator==(const EmbeddingTable&) const = default;
};

/// Stack the music table under the text table. The text rows are copied
/// bit-identically; the result has text.rows + music.rows rows.
/// Throws DimMismatch when the two dims differ.
EmbeddingTable expand_embeddings(const EmbeddingTable& text, const EmbeddingTable& music);

/// Fresh table with N(mean 0, std 0.02) entries; same seed, same table.
EmbeddingTable random_embedding(uint32_t rows, uint32_t dim, uint64_t seed, float stddev = 0.02f);

// EMB1 container: 16-byte header (magic "EMB1", u32 rows, u32 dim, u32 reserved,
// little-endian) followed by rows*dim little-endian f32.
void write_emb1(const std::string& path, const EmbeddingTable& table);
EmbeddingTable read_emb1(const std::string& path);

}  // namespace amtkit
