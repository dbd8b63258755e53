//! Type codes of the application messages.

use polldesk_core::codec::{Registry, TypeCode};

pub const WEATHER_REQUEST: TypeCode = TypeCode(102);
pub const WEATHER_RESPONSE: TypeCode = TypeCode(103);
pub const SET_WEATHER_NOTIFICATION: TypeCode = TypeCode(104);
pub const SIGN_UP_NOTIFICATION: TypeCode = TypeCode(105);
// scaffold:type-codes

/// The built-in handshake types plus every application type.
pub fn registry() -> Registry {
    let mut registry = Registry::new();
    let types = [
        ("WEATHER_REQUEST", WEATHER_REQUEST),
        ("WEATHER_RESPONSE", WEATHER_RESPONSE),
        ("SET_WEATHER_NOTIFICATION", SET_WEATHER_NOTIFICATION),
        ("SIGN_UP_NOTIFICATION", SIGN_UP_NOTIFICATION),
        // scaffold:type-registrations
    ];
    for (name, code) in types {
        registry
            .register_message_type(name, code.0)
            .expect("application type codes are unique");
    }
    registry
}
