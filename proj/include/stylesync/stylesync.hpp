#pragma once

#include "stylesync/error.hpp"
#include "stylesync/util.hpp"
#include "stylesync/lexicon.hpp"
#include "stylesync/corpus.hpp"
#include "stylesync/roles.hpp"
#include "stylesync/stats.hpp"
#include "stylesync/coordination.hpp"
#include "stylesync/synth.hpp"
#include "stylesync/hypotheses.hpp"
#include "stylesync/report.hpp"
#include "stylesync/pipeline.hpp"
