#pragma once

#include "hqsim/model.hpp"
#include "hqsim/splitter.hpp"
#include "hqsim/scheduler.hpp"
#include "hqsim/oracle.hpp"
#include "hqsim/metrics.hpp"
#include "hqsim/scriptgen.hpp"
#include "hqsim/qdevice.hpp"
#include "hqsim/dpm/frame.hpp"
#include "hqsim/dpm/session.hpp"
#include "hqsim/dpm/transport.hpp"
#include "hqsim/dpm/registry.hpp"
#include "hqsim/dpm/endpoint.hpp"
#include "hqsim/dpm/release_hook.hpp"
#include "hqsim/dpm/subjob_driver.hpp"
#include "hqsim/demo.hpp"
