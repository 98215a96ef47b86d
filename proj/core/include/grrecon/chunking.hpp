// chunking.hpp - axial chunking of volumes for windowed processing and the
// cross-fade blend that reassembles overlapping chunks.
#pragma once

#include <vector>

#include "grrecon/types.hpp"

namespace grrecon {

struct ChunkSpan {
    int start = 0;  // first axial slice
    int len = 0;
};

struct ChunkLayout {
    int nz = 0;
    int chunk_len = 0;
    int overlap = 0;
    std::vector<ChunkSpan> spans;
};

// Consecutive chunks advance by chunk_len - overlap; the final chunk is
// anchored at nz - chunk_len (overlapping more if needed) so the union covers
// every slice. Volumes shorter than chunk_len yield one full-volume chunk.
ChunkLayout make_chunk_layout(int nz, int chunk_len, int overlap);

// Cuts the volume into chunk volumes; chunk grids keep the in-plane geometry
// and shift the axial origin by start * voxel_size.
std::vector<Volume> chunk_volume(const Volume& vol, const ChunkLayout& layout);

// Per-slice blend weight before normalization: a trapezoid that ramps
// linearly over `overlap + 1` slices at both chunk ends and is flat inside.
// Strictly positive, so per-slice normalization is always well defined.
double blend_weight(int pos_in_chunk, int chunk_len, int overlap);

// Weighted recombination: out(slice) = sum_c w_c * chunk_c / sum_c w_c. The
// normalized weights sum to 1 at every slice, so chunks cut from one volume
// blend back to exactly that volume, and two chunks disagreeing in an overlap
// cross-fade linearly across it.
Volume blend_chunks(const std::vector<Volume>& chunks, const ChunkLayout& layout,
                    const Grid& full_grid);

}  // namespace grrecon
