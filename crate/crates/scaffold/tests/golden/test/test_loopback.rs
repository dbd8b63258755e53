use std::time::Duration;

use polldesk_core::dispatch::ReceiptLog;
use weather_app::config::DemoConfig;
use weather_app::messages::TestResponse;
use weather_app::{client, server};

#[test]
fn test_request_is_answered_end_to_end() {
    let mut config = DemoConfig {
        server_port: 0,
        ..DemoConfig::default()
    };
    config.reader.read_timeout = Duration::from_secs(5);
    let server = server::start(&config, ReceiptLog::silent(), &ReceiptLog::silent()).unwrap();
    config.server_port = server.local_addr().port();
    let reader = client::connect(&config, ReceiptLog::silent()).unwrap();

    let response = reader.get_test("sample".to_owned()).expect("no TestResponse");
    assert_eq!(response, TestResponse::new(String::new()));

    reader.dispose();
    server.stop();
}
