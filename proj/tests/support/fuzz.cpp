#include "fuzz.hpp"

#include <algorithm>
#include <deque>

namespace icc::testing {

std::vector<std::uint8_t> random_mask(std::mt19937_64& rng, int nx, int ny) {
  const int w = nx + 1, h = ny + 1;
  std::vector<std::uint8_t> in(static_cast<std::size_t>(w * h), 0);
  auto at = [&](int i, int j) -> std::uint8_t& { return in[static_cast<std::size_t>(j * w + i)]; };
  auto free_cell = [&](int i, int j) { return i >= 1 && j >= 1 && i <= nx - 1 && j <= ny - 1; };
  std::uniform_int_distribution<int> ri(1, nx - 1), rj(1, ny - 1);
  static constexpr int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};

  const int interior = (nx - 1) * (ny - 1);
  if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.65) {
    // Blob: Eden growth from one seed.
    const int target = std::max(1, static_cast<int>(interior * std::uniform_real_distribution<double>(0.15, 0.8)(rng)));
    std::vector<std::pair<int, int>> cells{{ri(rng), rj(rng)}};
    at(cells[0].first, cells[0].second) = 1;
    for (int tries = 0; static_cast<int>(cells.size()) < target && tries < 50 * target; ++tries) {
      const auto [i, j] = cells[std::uniform_int_distribution<std::size_t>(0, cells.size() - 1)(rng)];
      const int k = std::uniform_int_distribution<int>(0, 3)(rng);
      const int ni = i + di[k], nj = j + dj[k];
      if (!free_cell(ni, nj) || at(ni, nj)) continue;
      at(ni, nj) = 1;
      cells.emplace_back(ni, nj);
    }
  } else {
    // Snake: a few random walks from a common start.
    const int si = ri(rng), sj = rj(rng);
    const int walks = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int wk = 0; wk < walks; ++wk) {
      int i = si, j = sj;
      at(i, j) = 1;
      const int len = std::uniform_int_distribution<int>(3, std::max(4, 2 * (nx + ny)))(rng);
      for (int s = 0; s < len; ++s) {
        const int k = std::uniform_int_distribution<int>(0, 3)(rng);
        if (!free_cell(i + di[k], j + dj[k])) continue;
        i += di[k];
        j += dj[k];
        at(i, j) = 1;
      }
    }
  }

  // Fill every non-inside vertex that cannot reach the border through non-inside 4-neighbours.
  std::vector<std::uint8_t> reach(in.size(), 0);
  std::deque<std::pair<int, int>> q;
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i)
      if ((i == 0 || j == 0 || i == nx || j == ny) && !at(i, j)) {
        reach[static_cast<std::size_t>(j * w + i)] = 1;
        q.emplace_back(i, j);
      }
  while (!q.empty()) {
    const auto [i, j] = q.front();
    q.pop_front();
    for (int k = 0; k < 4; ++k) {
      const int ni = i + di[k], nj = j + dj[k];
      if (ni < 0 || nj < 0 || ni >= w || nj >= h) continue;
      const auto id = static_cast<std::size_t>(nj * w + ni);
      if (in[id] || reach[id]) continue;
      reach[id] = 1;
      q.emplace_back(ni, nj);
    }
  }
  for (std::size_t k = 0; k < in.size(); ++k)
    if (!reach[k]) in[k] = 1;
  return in;
}

GridDomain random_ball_like_domain(std::mt19937_64& rng, int max_cells) {
  std::uniform_int_distribution<int> size(4, max_cells);
  while (true) {
    const int nx = size(rng), ny = size(rng);
    const auto mask = random_mask(rng, nx, ny);
    GridDomain d = GridDomain::from_inside_mask(nx, ny, mask);
    if (ball_like_check(d)) return d;
  }
}

std::vector<GridDomain> fuzz_corpus(int count, std::uint64_t seed, int max_cells) {
  std::mt19937_64 rng(seed);
  std::vector<GridDomain> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) out.push_back(random_ball_like_domain(rng, max_cells));
  return out;
}

}  // namespace icc::testing
