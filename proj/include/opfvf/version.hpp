#pragma once

namespace opfvf {

inline constexpr const char* kToolVersion = "0.1.0";

// Schema versions for every file format this library reads or writes.
inline constexpr int kFormulationSchemaVersion = 1;
inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr int kCheckpointSchemaVersion = 1;
inline constexpr int kCertificateSchemaVersion = 1;
inline constexpr int kManifestSchemaVersion = 1;

} // namespace opfvf
