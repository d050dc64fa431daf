// Copyright (c) 2026 the diffinject authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace diffinject {

// Base for all library errors. `category()` is a stable machine-parsable
// token used by the CLI error contract.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& what)
        : std::runtime_error(what), category_(std::move(category)) {}
    const std::string& category() const { return category_; }

private:
    std::string category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error("domain", what) {}
};

class IngestError : public Error {
public:
    explicit IngestError(const std::string& what) : Error("ingest", what) {}
};

class ManifestError : public Error {
public:
    explicit ManifestError(const std::string& what) : Error("manifest", what) {}
};

class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& what) : Error("training", what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error("numerical", what) {}
};

class CalibrationError : public Error {
public:
    explicit CalibrationError(const std::string& what) : Error("calibration", what) {}
};

class PairingError : public Error {
public:
    explicit PairingError(const std::string& what) : Error("pairing", what) {}
};

class ReportError : public Error {
public:
    explicit ReportError(const std::string& what) : Error("report", what) {}
};

// Wraps a stage failure inside the pipeline; the stage name leads the message.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& category, const std::string& what)
        : Error(category, stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

} // namespace diffinject
