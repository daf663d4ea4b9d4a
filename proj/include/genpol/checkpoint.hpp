#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "genpol/critic.hpp"
#include "genpol/generative_model.hpp"

namespace genpol {

// Binary layout: "GPCK", u32 version, u64 metadata count, (str key, str value)*,
// u64 tensor count, then per tensor: str name, u32 rank, u64 extents, f64 data.
// Strings are u64 length + bytes; all integers little-endian as on the host.
struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(const std::string& name) const;
  const std::string& meta(const std::string& key) const;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint to_checkpoint(const GenerativeModel& model);
GenerativeModel model_from_checkpoint(const Checkpoint& ck);
Checkpoint to_checkpoint(const Critic& critic);
Critic critic_from_checkpoint(const Checkpoint& ck);

}  // namespace genpol
