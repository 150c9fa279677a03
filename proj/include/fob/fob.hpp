// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include "fob/config.hpp"
#include "fob/engine/engine.hpp"
#include "fob/evaluation/report.hpp"
#include "fob/hpo/hpo_file.hpp"
#include "fob/hpo/run_hpo.hpp"
#include "fob/optim/registry.hpp"
#include "fob/sched.hpp"
#include "fob/tasks/registry.hpp"
