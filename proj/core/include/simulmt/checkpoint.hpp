#pragma once

#include <map>
#include <string>

#include "simulmt/array.hpp"
#include "simulmt/param_store.hpp"

namespace simulmt {

/// Binary checkpoint: magic "SIMULMT1" (8 bytes), then per array
///   name length (u32 LE), name bytes, rank (u32 LE), dims (u32 LE each),
///   values as 64-bit little-endian floats,
/// a zero name length terminating the array section, and the config echo
/// as UTF-8 text to end of file. Round trips are bit-exact.
struct Checkpoint {
    std::map<std::string, Array> arrays;
    std::string config_echo;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Convenience: snapshot all values of a store / restore them by name,
/// validating shapes (the error names the offending array).
Checkpoint checkpoint_from_store(const ParamStore& store, const std::string& config_echo);
void load_into_store(const Checkpoint& ckpt, ParamStore& store);

}  // namespace simulmt
