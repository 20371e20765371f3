#include "gift/conversation.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>

namespace gift {

using nlohmann::json;

const char* edge_type_name(EdgeType t) {
  switch (t) {
    case EdgeType::ReplyTo: return "reply_to";
    case EdgeType::RepliedBy: return "replied_by";
    case EdgeType::ReplySelf: return "reply_self";
    case EdgeType::IndirectReply: return "indirect_reply";
  }
  throw std::logic_error("edge_type_name: bad enum");
}

void MpcInstance::validate() const {
  if (size() < 2) throw std::invalid_argument("MpcInstance: need at least 2 utterances");
  const int n_spk = static_cast<int>(interlocutors.size());
  for (int n = 0; n < size(); ++n) {
    const Utterance& u = utterances[n];
    if (u.speaker_idx < 0 || u.speaker_idx >= n_spk)
      throw std::invalid_argument("MpcInstance: utterance " + std::to_string(n) +
                                  " speaker index out of range");
    if (u.addressee_idx && (*u.addressee_idx < 0 || *u.addressee_idx >= n_spk))
      throw std::invalid_argument("MpcInstance: utterance " + std::to_string(n) +
                                  " addressee not an interlocutor");
    if (u.reply_target && (*u.reply_target < 0 || *u.reply_target >= n))
      throw std::invalid_argument("MpcInstance: utterance " + std::to_string(n) +
                                  " reply target must precede it");
  }
}

MpcInstance derive_reply_targets(MpcInstance instance) {
  for (int n = 0; n < instance.size(); ++n) {
    Utterance& u = instance.utterances[n];
    if (u.reply_target) continue;  // explicit link wins
    if (!u.addressee_idx) continue;
    for (int m = n - 1; m >= 0; --m) {
      if (instance.utterances[m].speaker_idx == *u.addressee_idx) {
        u.reply_target = m;
        break;
      }
    }
  }
  return instance;
}

EdgeType edge_type(int i, int j, const MpcInstance& instance) {
  if (i < 0 || i >= instance.size() || j < 0 || j >= instance.size())
    throw std::out_of_range("edge_type: utterance index out of range");
  if (i == j) return EdgeType::ReplySelf;
  const auto& ti = instance.utterances[i].reply_target;
  if (ti && *ti == j) return EdgeType::ReplyTo;
  const auto& tj = instance.utterances[j].reply_target;
  if (tj && *tj == i) return EdgeType::RepliedBy;
  return EdgeType::IndirectReply;
}

EdgeMatrix build_edge_matrix(const MpcInstance& instance) {
  EdgeMatrix m;
  m.n = instance.size();
  m.grid.assign(static_cast<std::size_t>(m.n) * m.n, EdgeType::IndirectReply);
  for (int i = 0; i < m.n; ++i) {
    m.at(i, i) = EdgeType::ReplySelf;
    const auto& t = instance.utterances[i].reply_target;
    if (t) {
      m.at(i, *t) = EdgeType::ReplyTo;
      m.at(*t, i) = EdgeType::RepliedBy;
    }
  }
  return m;
}

std::string instance_to_json(const MpcInstance& instance) {
  json utts = json::array();
  for (const Utterance& u : instance.utterances) {
    json ju;
    ju["speaker"] = instance.interlocutors.at(u.speaker_idx);
    ju["text"] = u.text;
    if (u.addressee_idx) ju["addressee"] = instance.interlocutors.at(*u.addressee_idx);
    if (u.reply_target) ju["reply_to"] = *u.reply_target;
    utts.push_back(std::move(ju));
  }
  json j;
  j["utterances"] = std::move(utts);
  return j.dump();
}

MpcInstance instance_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  if (!j.contains("utterances") || !j["utterances"].is_array() || j["utterances"].empty())
    throw std::invalid_argument("conversation: missing utterances array");
  MpcInstance inst;
  auto speaker_id = [&inst](const std::string& name) -> int {
    for (std::size_t i = 0; i < inst.interlocutors.size(); ++i)
      if (inst.interlocutors[i] == name) return static_cast<int>(i);
    inst.interlocutors.push_back(name);
    return static_cast<int>(inst.interlocutors.size()) - 1;
  };
  // First pass assigns speaker ids in order of first appearance.
  for (const auto& ju : j["utterances"]) {
    Utterance u;
    u.speaker_idx = speaker_id(ju.at("speaker").get<std::string>());
    u.text = ju.at("text").get<std::string>();
    if (ju.contains("reply_to")) u.reply_target = ju["reply_to"].get<int>();
    inst.utterances.push_back(std::move(u));
  }
  // Addressees must name someone who speaks in the conversation.
  for (std::size_t n = 0; n < inst.utterances.size(); ++n) {
    const auto& ju = j["utterances"][n];
    if (!ju.contains("addressee")) continue;
    const std::string name = ju["addressee"].get<std::string>();
    int idx = -1;
    for (std::size_t i = 0; i < inst.interlocutors.size(); ++i)
      if (inst.interlocutors[i] == name) idx = static_cast<int>(i);
    if (idx < 0)
      throw std::invalid_argument("conversation: addressee '" + name +
                                  "' never speaks in this conversation");
    inst.utterances[n].addressee_idx = idx;
  }
  inst = derive_reply_targets(std::move(inst));
  inst.validate();
  return inst;
}

}  // namespace gift
