var listeners = {};
emitter.on("dispatch", function (msg) {
  log("dispatch");
  var listener = listeners[msg.topic];
  if (listeners.hasOwnProperty(msg.topic)) {
    listener(msg);
  }
});
