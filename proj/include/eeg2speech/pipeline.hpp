#pragma once

#include "eeg2speech/cli.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace eeg2speech::pipeline {

// Artifacts written under RunConfig::out_dir:
//   clean/<id>.f32              preprocessed EEG (31 channels, z-scored)
//   eeg_feats/<id>.csv          frames x 155 statistical features
//   split.json                  train/val/test ids, stratified by subject x condition
//   kpca/<scope>.json           fitted KPCA per subject (or "pooled")
//   eeg_reduced/<id>.csv        frames x 30 KPCA features
//   acoustic/<id>.csv           frames x 571, kinds f1..f16 side by side
//   models/synth_<group>.ckpt   + .history.csv
//   models/regress_<group>_fN.ckpt + .history.csv
//   metrics/{synthesis,acoustic}.{json,csv}
//   spectrograms/<id>_{true,pred}.{csv,pgm}
//   gradcheck.json

/// "s<subject>_<condition>"
std::string group_name(int subject, dataio::Condition condition);

nlohmann::json gen_data(const cli::RunConfig& cfg);
nlohmann::json preprocess(const cli::RunConfig& cfg, const cli::RunFilter& filter);
nlohmann::json extract_eeg_feats(const cli::RunConfig& cfg, const cli::RunFilter& filter);
nlohmann::json split(const cli::RunConfig& cfg);
nlohmann::json fit_kpca(const cli::RunConfig& cfg, const cli::RunFilter& filter);
nlohmann::json extract_acoustic(const cli::RunConfig& cfg, const cli::RunFilter& filter);
nlohmann::json train_synth(const cli::RunConfig& cfg, const cli::RunFilter& filter);
nlohmann::json train_regress(const cli::RunConfig& cfg, const cli::RunFilter& filter);
nlohmann::json eval_synth(const cli::RunConfig& cfg, const cli::RunFilter& filter);
nlohmann::json eval_regress(const cli::RunConfig& cfg, const cli::RunFilter& filter);
nlohmann::json export_spectrogram(const cli::RunConfig& cfg, const cli::RunFilter& filter);
nlohmann::json grad_check(const cli::RunConfig& cfg);

/// The EEG -> waveform stages in order, from gen-data through eval-regress.
nlohmann::json run_all(const cli::RunConfig& cfg, const cli::RunFilter& filter = {});

}  // namespace eeg2speech::pipeline
