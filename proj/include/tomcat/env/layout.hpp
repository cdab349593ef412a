#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tomcat {

enum class Tile : uint8_t { Floor, Counter, OnionDispenser, DishDispenser, Pot, ServingStation };

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

// Rectangular kitchen map. Boundary cells are never Floor, every station
// kind appears at least once, and the spawn zone is the set of Floor cells.
class GridLayout {
 public:
  int width() const { return width_; }
  int height() const { return height_; }
  Tile tile(int x, int y) const { return tiles_[static_cast<size_t>(y) * width_ + x]; }
  Tile tile(Cell c) const { return tile(c.x, c.y); }
  bool in_bounds(Cell c) const { return c.x >= 0 && c.x < width_ && c.y >= 0 && c.y < height_; }
  bool is_floor(Cell c) const { return in_bounds(c) && tile(c) == Tile::Floor; }

  const std::vector<Cell>& spawn_zone() const { return spawn_zone_; }
  const std::vector<Cell>& pots() const { return pots_; }
  const std::vector<Cell>& stations(Tile kind) const;

  // Breadth-first distances over Floor cells from `from` (itself a Floor
  // cell); -1 marks unreachable cells. `blocked` cells are treated as walls.
  std::vector<int> floor_distances(Cell from, const std::vector<Cell>& blocked = {}) const;
  int dist_at(const std::vector<int>& dists, Cell c) const {
    return dists[static_cast<size_t>(c.y) * width_ + c.x];
  }

  // Path distance between two floor cells; unreachable pairs get the finite
  // sentinel width+height.
  int path_distance(Cell a, Cell b) const;
  int distance_sentinel() const { return width_ + height_; }

  std::string to_text() const;
  uint64_t text_hash() const;

  friend GridLayout parse_layout(const std::string& text);

 private:
  int width_ = 0, height_ = 0;
  std::vector<Tile> tiles_;
  std::vector<Cell> spawn_zone_;
  std::vector<Cell> pots_, onion_dispensers_, dish_dispensers_, serving_stations_, counters_;
};

// Parses the layout DSL: 'X' Counter, 'O' OnionDispenser, 'D' DishDispenser,
// 'P' Pot, 'S' ServingStation, ' ' Floor; newline-separated rows.
// Throws std::invalid_argument naming the offending row/column.
GridLayout parse_layout(const std::string& text);

// The bundled two-room layout with a middle bottleneck column and two pots.
const std::string& default_layout_text();
GridLayout default_layout();

}  // namespace tomcat
