//! Absent-response sentinels. A client accessor returns one of these when
//! its read fails; they never equal a genuine response and cannot be sent.

use std::sync::LazyLock;

use polldesk_core::codec::Envelope;

use crate::message_type;

pub static NO_WEATHER_RESPONSE: LazyLock<Envelope> =
    LazyLock::new(|| Envelope::sentinel(message_type::WEATHER_RESPONSE));
pub static NO_TEST_RESPONSE: LazyLock<Envelope> = LazyLock::new(|| Envelope::sentinel(message_type::TEST_RESPONSE));
// scaffold:sentinels
