mod common;

use std::io::Write;
use std::net::TcpStream;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use common::*;
use polldesk_core::client::{ClientError, NodeKey, RemoteReaderConfig, RemoteReaderPool};
use polldesk_core::codec::{Envelope, Payload};
use polldesk_core::dispatch::ReceiptLog;
use polldesk_core::transport::{listen, OutMessageStream};

const G1: &[u8] = include_bytes!("golden/test_request.bin");

fn pool(server: &TestServer, config: RemoteReaderConfig) -> (RemoteReaderPool, Lines) {
    let lines = Lines::default();
    (RemoteReaderPool::new(server.addr(), codec(), config, lines.log()), lines)
}

fn ready_pool(server: &TestServer, config: RemoteReaderConfig) -> RemoteReaderPool {
    let (pool, _) = pool(server, config);
    pool.init_session(&NodeKey::generate()).unwrap();
    pool
}

fn test_request() -> Envelope {
    Envelope::new(TEST_REQUEST, Payload::new().with("request", "request"))
}

fn masked(lines: Vec<String>) -> Vec<String> {
    lines
        .into_iter()
        .map(|l| l.split(" @").next().unwrap().to_owned())
        .collect()
}

#[test]
fn raw_golden_frame_reaches_the_sink() {
    let (tx, rx) = mpsc::channel::<OutMessageStream>();
    let tx = std::sync::Mutex::new(tx);
    let handle = listen("127.0.0.1:0", codec(), Arc::new(move |s| tx.lock().unwrap().send(s).unwrap())).unwrap();
    let mut socket = TcpStream::connect(handle.local_addr()).unwrap();
    socket.write_all(G1).unwrap();
    let got = rx.recv_timeout(Duration::from_secs(5)).unwrap();
    assert_eq!(got.message().type_code, TEST_REQUEST);
    assert_eq!(got.message().payload.string("request").unwrap(), "request");
    handle.shutdown();
}

#[test]
fn interleaved_clients_keep_their_connection_ids() {
    let (tx, rx) = mpsc::channel::<OutMessageStream>();
    let tx = std::sync::Mutex::new(tx);
    let handle = listen("127.0.0.1:0", codec(), Arc::new(move |s| tx.lock().unwrap().send(s).unwrap())).unwrap();
    let mut a = TcpStream::connect(handle.local_addr()).unwrap();
    let mut b = TcpStream::connect(handle.local_addr()).unwrap();
    let frame = |who: &str| codec().encode(&Envelope::new(TEST_REQUEST, Payload::new().with("request", who))).unwrap();
    a.write_all(&frame("a")).unwrap();
    b.write_all(&frame("b")).unwrap();
    a.write_all(&frame("a")).unwrap();
    let got: Vec<_> = (0..3).map(|_| rx.recv_timeout(Duration::from_secs(5)).unwrap()).collect();
    let conn_of = |who: &str| {
        let ids: Vec<_> = got
            .iter()
            .filter(|s| s.message().payload.string("request").unwrap() == who)
            .map(|s| s.connection())
            .collect();
        ids
    };
    let (from_a, from_b) = (conn_of("a"), conn_of("b"));
    assert_eq!(from_a.len(), 2);
    assert_eq!(from_a[0], from_a[1]);
    assert_eq!(from_b.len(), 1);
    assert_ne!(from_a[0], from_b[0]);
    handle.shutdown();
}

#[test]
fn garbage_closes_only_the_offending_connection() {
    let server = TestServer::start(fast_config(), echo);
    let good = ready_pool(&server, RemoteReaderConfig::default());
    let mut bad = TcpStream::connect(server.addr()).unwrap();
    bad.write_all(b"GET / HTTP/1.1\r\n\r\n").unwrap();
    let mut sink = [0u8; 8];
    bad.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    assert_eq!(std::io::Read::read(&mut bad, &mut sink).unwrap_or(0), 0);
    let response = good.read(&test_request()).unwrap();
    assert_eq!(response.payload.string("response").unwrap(), "response");
    server.stop();
}

#[test]
fn handshake_and_first_read() {
    let server = TestServer::start(fast_config(), echo);
    let (pool, client_lines) = pool(&server, RemoteReaderConfig::default());
    assert!(matches!(pool.read(&test_request()), Err(ClientError::NotReady)));
    let key = NodeKey::generate();
    pool.init_session(&key).unwrap();
    pool.init_session(&key).unwrap();
    assert_eq!(pool.node_key(), Some(key.clone()));
    assert_eq!(
        masked(client_lines.snapshot()),
        ["NODE_KEY_NOTIFICATION received", "INIT_READ_FEEDBACK_NOTIFICATION received"]
    );

    let response = pool.read(&test_request()).unwrap();
    assert_eq!(response.type_code, TEST_RESPONSE);
    assert_eq!(response.payload.string("response").unwrap(), "response");
    assert_eq!(
        masked(server.receipts.snapshot()),
        ["REGISTER_CLIENT_NOTIFICATION received", "INIT_READ_NOTIFICATION received", "TEST_REQUEST received"]
    );
    assert_eq!(pool.stats().open(), 1);
    server.stop();
}

#[test]
fn init_against_closed_port_is_connect_failure() {
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap()
    };
    let pool = RemoteReaderPool::new(port, codec(), RemoteReaderConfig::default(), ReceiptLog::silent());
    assert!(matches!(pool.init_session(&NodeKey::generate()), Err(ClientError::ConnectFailure { .. })));
    assert!(!pool.is_ready());
}

#[test]
fn concurrent_reads_get_their_own_responses() {
    let server = TestServer::start(fast_config(), echo);
    let config = RemoteReaderConfig {
        max_connections: 4,
        ..RemoteReaderConfig::default()
    };
    let pool = Arc::new(ready_pool(&server, config));
    let peak = Arc::new(AtomicUsize::new(0));
    let done = Arc::new(std::sync::atomic::AtomicBool::new(false));
    let sampler = {
        let (pool, peak, done) = (pool.clone(), peak.clone(), done.clone());
        thread::spawn(move || {
            while !done.load(Ordering::Relaxed) {
                peak.fetch_max(pool.stats().open(), Ordering::Relaxed);
                thread::sleep(Duration::from_millis(1));
            }
        })
    };
    let readers: Vec<_> = (0..16)
        .map(|_| {
            let pool = pool.clone();
            thread::spawn(move || {
                for _ in 0..50 {
                    let request = test_request();
                    let response = pool.read(&request).unwrap();
                    assert_eq!(response.payload.string("echo").unwrap(), request.message_key.to_hex());
                }
            })
        })
        .collect();
    for r in readers {
        r.join().unwrap();
    }
    done.store(true, Ordering::Relaxed);
    sampler.join().unwrap();
    assert!(peak.load(Ordering::Relaxed) <= 4);
    let stats = pool.stats();
    assert_eq!(stats.checked_out, 0);
    assert!(stats.idle <= 4);
    server.stop();
}

#[test]
fn failed_handler_times_out_and_discards_the_connection() {
    let server = TestServer::start(fast_config(), |_| Err("boom".into()));
    let pool = ready_pool(
        &server,
        RemoteReaderConfig {
            read_timeout: Duration::from_millis(300),
            ..RemoteReaderConfig::default()
        },
    );
    let started = Instant::now();
    assert!(matches!(pool.read(&test_request()), Err(ClientError::ReadTimeout)));
    assert!(started.elapsed() >= Duration::from_millis(300));
    let stats = pool.stats();
    assert_eq!((stats.idle, stats.checked_out, stats.discarded), (0, 0, 1));

    let sentinel = Envelope::sentinel(TEST_RESPONSE);
    let got = pool.read_or_sentinel(&test_request(), &sentinel);
    assert!(got.is_sentinel());
    server.stop();
}

#[test]
fn server_down_then_back_up() {
    let server = TestServer::start(fast_config(), echo);
    let addr = server.addr();
    let pool = ready_pool(
        &server,
        RemoteReaderConfig {
            read_timeout: Duration::from_millis(500),
            ..RemoteReaderConfig::default()
        },
    );
    server.stop();
    assert!(pool.read(&test_request()).is_err());
    assert!(matches!(pool.read(&test_request()), Err(ClientError::ConnectFailure { .. })));
    let sentinel = Envelope::sentinel(TEST_RESPONSE);
    assert!(pool.read_or_sentinel(&test_request(), &sentinel).is_sentinel());
    assert_eq!(pool.stats().open(), 0);

    // the port is free again and the same pool recovers
    let receipts = Lines::default();
    let dispatcher = polldesk_core::dispatch::ServerDispatcher::new(Default::default(), registry(), receipts.log()).unwrap();
    dispatcher
        .register_request_route(TEST_REQUEST, fast_config(), polldesk_core::worker::HandlerThreadCreator::new(echo))
        .unwrap();
    let handle = listen(addr, codec(), dispatcher.clone()).unwrap();
    let response = pool.read(&test_request()).unwrap();
    assert_eq!(response.payload.string("response").unwrap(), "response");
    dispatcher.shutdown();
    handle.shutdown();
}

#[test]
fn shutdown_during_read_is_connection_closed() {
    let server = TestServer::start(fast_config(), |r| {
        thread::sleep(Duration::from_millis(500));
        echo(r)
    });
    let pool = ready_pool(&server, RemoteReaderConfig::default());
    let reader = thread::spawn(move || pool.read(&test_request()));
    thread::sleep(Duration::from_millis(100));
    server.handle.shutdown();
    assert!(matches!(reader.join().unwrap(), Err(ClientError::ConnectionClosed)));
    assert_eq!(server.handle.connection_count(), 0);
    server.dispatcher.shutdown();
}

#[test]
fn dispose_closes_idle_and_waits_for_in_flight() {
    let server = TestServer::start(fast_config(), |r| {
        if r.payload.string("request").ok() == Some("slow") {
            thread::sleep(Duration::from_millis(300));
        }
        echo(r)
    });
    let pool = Arc::new(ready_pool(&server, RemoteReaderConfig::default()));
    // open three connections and leave them idle
    let warm: Vec<_> = (0..3)
        .map(|_| {
            let pool = pool.clone();
            thread::spawn(move || {
                pool.read(&Envelope::new(TEST_REQUEST, Payload::new().with("request", "slow"))).unwrap();
            })
        })
        .collect();
    warm.into_iter().for_each(|t| t.join().unwrap());
    assert_eq!(pool.stats().idle, 3);

    let in_flight = {
        let pool = pool.clone();
        thread::spawn(move || pool.read(&Envelope::new(TEST_REQUEST, Payload::new().with("request", "slow"))))
    };
    let deadline = Instant::now() + Duration::from_secs(5);
    while pool.stats().checked_out == 0 {
        assert!(Instant::now() < deadline);
        thread::yield_now();
    }
    pool.dispose();
    assert!(in_flight.join().unwrap().is_ok());
    assert_eq!(pool.stats().open(), 0);
    pool.dispose();
    assert!(matches!(pool.read(&test_request()), Err(ClientError::Disposed)));
    server.stop();
}

#[test]
fn unknown_types_are_counted_and_dropped() {
    let server = TestServer::start(fast_config(), echo);
    let mut socket = TcpStream::connect(server.addr()).unwrap();
    // TEST_RESPONSE is registered but has no route on the server
    let frame = codec().encode(&Envelope::new(TEST_RESPONSE, Payload::new())).unwrap();
    socket.write_all(&frame).unwrap();
    let deadline = Instant::now() + Duration::from_secs(5);
    while server.dispatcher.stats().unknown_routes == 0 {
        assert!(Instant::now() < deadline);
        thread::sleep(Duration::from_millis(5));
    }
    assert!(server.receipts.snapshot().is_empty());
    server.stop();
}

#[test]
fn notification_is_applied_before_a_later_read() {
    let seen = Arc::new(std::sync::Mutex::new(String::new()));
    let server = {
        let seen = seen.clone();
        TestServer::start(fast_config(), move |r| {
            let mut response = echo(r)?;
            response.payload.insert("seen", seen.lock().unwrap().clone());
            Ok(response)
        })
    };
    {
        let seen = seen.clone();
        server
            .dispatcher
            .register_notification_route(polldesk_core::codec::TypeCode(102), move |s| {
                thread::sleep(Duration::from_millis(50));
                *seen.lock().unwrap() = s.message().payload.string("value").unwrap().to_owned();
            })
            .unwrap();
    }
    let mut registry = (*registry()).clone();
    registry.register_message_type("SET_NOTIFICATION", 102).unwrap();
    let pool = RemoteReaderPool::new(
        server.addr(),
        polldesk_core::codec::Codec::new(Arc::new(registry)),
        RemoteReaderConfig::default(),
        ReceiptLog::silent(),
    );
    pool.init_session(&NodeKey::generate()).unwrap();
    for i in 0..5 {
        let value = format!("v{i}");
        pool.notify(&Envelope::new(102, Payload::new().with("value", value.as_str()))).unwrap();
        let response = pool.read(&test_request()).unwrap();
        assert_eq!(response.payload.string("seen").unwrap(), value);
    }
    server.stop();
}
