var routes = {};
bus.on("call", function (msg) {
  var fn = routes[msg.id];
  if (routes.hasOwnProperty(msg.id)) {
    fn(msg);
  }
});
