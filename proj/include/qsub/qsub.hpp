#pragma once

#include "qsub/angular.hpp"
#include "qsub/channel.hpp"
#include "qsub/closed_forms.hpp"
#include "qsub/mcsim.hpp"
#include "qsub/objective.hpp"
#include "qsub/oracle.hpp"
#include "qsub/sdp.hpp"
