#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gift {

/// Directional reply relationship between two utterances. The enum order
/// fixes the column layout of the per-layer edge-scalar table.
enum class EdgeType : std::uint8_t {
  ReplyTo = 0,       // query utterance replies to key utterance
  RepliedBy = 1,     // key utterance replies to query utterance
  ReplySelf = 2,     // same utterance
  IndirectReply = 3  // every other pair
};

constexpr int kNumEdgeTypes = 4;

const char* edge_type_name(EdgeType t);

struct Utterance {
  int speaker_idx = -1;  // interlocutor-table position (order of first appearance)
  std::vector<int> tokens;
  std::optional<int> addressee_idx;
  std::optional<int> reply_target;  // utterance index, strictly earlier
  std::string text;                 // original whitespace-tokenizable form
};

/// One multi-party conversation: ordered utterances plus the interlocutor
/// roster in order of first appearance.
struct MpcInstance {
  std::vector<Utterance> utterances;
  std::vector<std::string> interlocutors;

  int size() const { return static_cast<int>(utterances.size()); }
  void validate() const;  // throws std::invalid_argument on violation
};

/// Fills reply_target for every utterance that has an addressee but no
/// explicit link: the latest preceding utterance by that addressee, absent
/// when the addressee has not spoken yet. Explicit links win.
MpcInstance derive_reply_targets(MpcInstance instance);

/// Edge classification for an (i, j) utterance pair.
EdgeType edge_type(int i, int j, const MpcInstance& instance);

/// Utterance-level edge grid (token-level expansion happens at encoding).
struct EdgeMatrix {
  int n = 0;
  std::vector<EdgeType> grid;  // n×n row-major

  EdgeType at(int i, int j) const { return grid[static_cast<std::size_t>(i) * n + j]; }
  EdgeType& at(int i, int j) { return grid[static_cast<std::size_t>(i) * n + j]; }
};

EdgeMatrix build_edge_matrix(const MpcInstance& instance);

/// JSON (de)serialization for the JSONL corpus contract. One conversation
/// per object; `label` round-trips separately (see corpus.hpp).
std::string instance_to_json(const MpcInstance& instance);
MpcInstance instance_from_json(const std::string& json_text);

}  // namespace gift
