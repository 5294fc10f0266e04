#pragma once

#include <string>
#include <vector>

#include "absinstruct/types.hpp"

namespace absinstruct::jsonl {

// Loaders throw IoError when the file cannot be opened and SchemaError with
// "path:line:" prefixes for malformed records. Writers create missing parent
// directories and emit one JSON object per line with sorted keys, so equal
// in-memory values always serialize to byte-identical files.

std::vector<AbstractionTuple> load_tuples(const std::string& path);
void write_tuples(const std::vector<AbstractionTuple>& tuples, const std::string& path);

std::vector<InstructionRecord> load_records(const std::string& path);
void write_records(const std::vector<InstructionRecord>& records, const std::string& path);

std::vector<CandidateExample> load_candidates(const std::string& path);
void write_candidates(const std::vector<CandidateExample>& candidates, const std::string& path);

}  // namespace absinstruct::jsonl
