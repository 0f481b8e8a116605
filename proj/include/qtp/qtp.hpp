#pragma once

// Umbrella header: the whole pipeline library.

#include "qtp/backend.hpp"
#include "qtp/cli.hpp"
#include "qtp/config.hpp"
#include "qtp/distiller.hpp"
#include "qtp/errors.hpp"
#include "qtp/evidence.hpp"
#include "qtp/flatten.hpp"
#include "qtp/gateway.hpp"
#include "qtp/http_backend.hpp"
#include "qtp/judge.hpp"
#include "qtp/knowledge.hpp"
#include "qtp/knowledge_format.hpp"
#include "qtp/manifest.hpp"
#include "qtp/metrics.hpp"
#include "qtp/miner.hpp"
#include "qtp/prompts.hpp"
#include "qtp/quality.hpp"
#include "qtp/report.hpp"
#include "qtp/runtime.hpp"
#include "qtp/table.hpp"
