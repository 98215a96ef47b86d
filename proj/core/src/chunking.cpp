#include "grrecon/chunking.hpp"

#include <algorithm>
#include <stdexcept>

namespace grrecon {

ChunkLayout make_chunk_layout(int nz, int chunk_len, int overlap) {
    if (nz < 1) throw std::invalid_argument("chunk layout: nz must be >= 1");
    if (chunk_len < 1) throw std::invalid_argument("chunk layout: chunk_len must be >= 1");
    if (overlap < 0 || overlap >= chunk_len)
        throw std::invalid_argument("chunk layout: need chunk_len > overlap >= 0");
    ChunkLayout layout;
    layout.nz = nz;
    layout.chunk_len = chunk_len;
    layout.overlap = overlap;
    if (chunk_len >= nz) {
        layout.spans.push_back({0, nz});
        return layout;
    }
    const int stride = chunk_len - overlap;
    int start = 0;
    for (;;) {
        layout.spans.push_back({start, chunk_len});
        if (start + chunk_len >= nz) break;
        start = std::min(start + stride, nz - chunk_len);
    }
    return layout;
}

std::vector<Volume> chunk_volume(const Volume& vol, const ChunkLayout& layout) {
    vol.validate();
    if (vol.grid.dims[2] != layout.nz)
        throw std::invalid_argument("chunk_volume: layout nz does not match the volume");
    const std::size_t slice_pitch =
        static_cast<std::size_t>(vol.grid.dims[0]) * vol.grid.dims[1];
    std::vector<Volume> chunks;
    chunks.reserve(layout.spans.size());
    for (const ChunkSpan& span : layout.spans) {
        Grid g = vol.grid;
        g.dims[2] = span.len;
        g.origin[2] = vol.grid.origin[2] + span.start * vol.grid.voxel_size[2];
        Volume c(g);
        std::copy_n(vol.data.begin() + static_cast<std::ptrdiff_t>(slice_pitch) * span.start,
                    slice_pitch * span.len, c.data.begin());
        chunks.push_back(std::move(c));
    }
    return chunks;
}

double blend_weight(int pos_in_chunk, int chunk_len, int overlap) {
    const int up = pos_in_chunk + 1;
    const int down = chunk_len - pos_in_chunk;
    const int cap = overlap + 1;
    return static_cast<double>(std::min({up, down, cap})) / cap;
}

Volume blend_chunks(const std::vector<Volume>& chunks, const ChunkLayout& layout,
                    const Grid& full_grid) {
    full_grid.validate();
    if (full_grid.dims[2] != layout.nz)
        throw std::invalid_argument("blend_chunks: layout nz does not match the grid");
    if (chunks.size() != layout.spans.size())
        throw std::invalid_argument("blend_chunks: chunk count does not match the layout");
    const std::size_t slice_pitch =
        static_cast<std::size_t>(full_grid.dims[0]) * full_grid.dims[1];
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        const Grid& g = chunks[c].grid;
        if (g.dims[0] != full_grid.dims[0] || g.dims[1] != full_grid.dims[1] ||
            g.dims[2] != layout.spans[c].len || chunks[c].data.size() != slice_pitch * g.dims[2])
            throw std::invalid_argument("blend_chunks: chunk shape does not match the layout");
    }

    std::vector<double> acc(full_grid.voxel_count(), 0.0);
    std::vector<double> wsum(layout.nz, 0.0);
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        const ChunkSpan& span = layout.spans[c];
        for (int p = 0; p < span.len; ++p) {
            const double w = blend_weight(p, span.len, layout.overlap);
            wsum[span.start + p] += w;
            const float* src = chunks[c].data.data() + slice_pitch * p;
            double* dst = acc.data() + slice_pitch * (span.start + p);
            for (std::size_t i = 0; i < slice_pitch; ++i) dst[i] += w * src[i];
        }
    }
    Volume out(full_grid);
    for (int z = 0; z < layout.nz; ++z) {
        if (!(wsum[z] > 0.0))
            throw std::invalid_argument("blend_chunks: slice not covered by any chunk");
        const double inv = 1.0 / wsum[z];
        float* dst = out.data.data() + slice_pitch * z;
        const double* src = acc.data() + slice_pitch * z;
        for (std::size_t i = 0; i < slice_pitch; ++i)
            dst[i] = static_cast<float>(src[i] * inv);
    }
    return out;
}

}  // namespace grrecon
