var commands = {};
commands["ping"] = function (body) {
  reply("pong");
};
socket.on("message", function (event) {
  var body = JSON.parse(event.data);
  var cmd = commands[body.type];
  if (commands.hasOwnProperty(body.type)) {
    cmd(body);
  }
});
